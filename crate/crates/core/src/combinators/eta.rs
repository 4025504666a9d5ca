use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::SetMapFamily;

const NONE: u32 = u32::MAX;

/// `η(x, w)`: the point of `φ_i⁻¹(w)` closest to `x`, smallest index on
/// ties. Stored as the position inside the sorted fiber.
#[derive(Clone, Debug)]
pub struct EtaSection {
    family: Arc<SetMapFamily>,
    table: Vec<u32>,
}

impl EtaSection {
    pub fn new(family: Arc<SetMapFamily>) -> Self {
        let m = family.len();
        let table = (0..family.domain().len())
            .into_par_iter()
            .flat_map_iter(|x| {
                let family = &family;
                (0..m).map(move |w| match family.nearest_in_fiber(x, w) {
                    None => NONE,
                    Some(p) => family.fiber(w).binary_search(&p).expect("fiber member") as u32,
                })
            })
            .collect();
        EtaSection { family, table }
    }

    pub fn family(&self) -> &Arc<SetMapFamily> {
        &self.family
    }

    /// Position of `η(x, w)` inside `fiber(w)`.
    pub fn local(&self, x: usize, w: usize) -> Result<usize> {
        match self.table[x * self.family.len() + w] {
            NONE => Err(Error::Domain(format!(
                "empty fiber over {}",
                self.family.label(w)
            ))),
            k => Ok(k as usize),
        }
    }

    /// `η(x, w)` as a point of the domain.
    pub fn point(&self, x: usize, w: usize) -> Result<usize> {
        Ok(self.family.fiber(w)[self.local(x, w)?])
    }

    /// Both triangle bounds for every `(x, y, w)` with a nonempty fiber.
    /// Returns the number of triples checked.
    pub fn check_triangles(&self) -> Result<u64> {
        let fam = &*self.family;
        let space = fam.domain();
        let n = space.len();
        let counts: Vec<u64> = (0..n)
            .into_par_iter()
            .map(|x| -> Result<u64> {
                let mut count = 0;
                for w in 0..fam.len() {
                    if fam.fiber(w).is_empty() {
                        continue;
                    }
                    let ex = self.point(x, w)?;
                    let dx = fam.fiber_dist_raw(x, w);
                    if space.raw(x, ex) != dx {
                        return Err(Error::Internal(format!(
                            "η({}, {}) does not realize the fiber distance",
                            space.label(x),
                            fam.label(w)
                        )));
                    }
                    for y in 0..n {
                        let ey = self.point(y, w)?;
                        let slack = dx + fam.fiber_dist_raw(y, w);
                        let dxy = space.raw(x, y);
                        let dee = space.raw(ex, ey);
                        if dee > dxy + slack || dxy > dee + slack {
                            return Err(Error::Internal(format!(
                                "triangle bound fails at ({}, {}, {})",
                                space.label(x),
                                space.label(y),
                                fam.label(w)
                            )));
                        }
                        count += 1;
                    }
                }
                Ok(count)
            })
            .collect::<Result<_>>()?;
        Ok(counts.into_iter().sum())
    }
}
