use serde::{Deserialize, Serialize};

use super::Filter;
use crate::error::{Error, Result};
use crate::signal::{SampleQ14, StreamBlock};

pub type BandId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Wide,
    Dense,
}

/// Band filters sharing one input, ordered by band id.
#[derive(Debug, Clone)]
pub struct FilterBank {
    bands: Vec<(BandId, Filter)>,
    spacing: Spacing,
    out: Vec<SampleQ14>,
}

impl FilterBank {
    pub fn new(mut bands: Vec<(BandId, Filter)>, spacing: Spacing) -> Result<Self> {
        bands.sort_by_key(|(id, _)| *id);
        if bands.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::config("duplicate band id in filter bank"));
        }
        let out = vec![0; bands.len()];
        Ok(Self {
            bands,
            spacing,
            out,
        })
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn band_ids(&self) -> impl Iterator<Item = BandId> + '_ {
        self.bands.iter().map(|(id, _)| *id)
    }

    /// Runs every band on `x`; the result is ordered by band id.
    #[inline]
    pub fn tick(&mut self, x: SampleQ14) -> &[SampleQ14] {
        for (o, (_, f)) in self.out.iter_mut().zip(self.bands.iter_mut()) {
            *o = f.tick(x);
        }
        &self.out
    }

    pub fn reset(&mut self) {
        self.bands.iter_mut().for_each(|(_, f)| f.reset());
        self.out.iter_mut().for_each(|o| *o = 0);
    }

    pub fn macs(&self) -> u64 {
        self.bands.iter().map(|(_, f)| f.macs()).sum()
    }
}
