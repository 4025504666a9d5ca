//! Command-line shorthands for group, subgroup and action presets.
//!
//! Every flag that takes a preset also accepts inline JSON (`{...}`) or
//! `@path` to a JSON file.

use std::path::Path;

use coarsekit::error::{Error, Result};
use coarsekit::exact::{parse_q, Real, Q};
use coarsekit::groups::ActionSpec;
use coarsekit::io::read_json;
use coarsekit::metric::{GroupSpec, SubgroupSpec};
use serde::de::DeserializeOwned;

fn json_or<T: DeserializeOwned>(s: &str, short: impl FnOnce(&str) -> Option<T>, what: &str) -> Result<T> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| Error::Parse(format!("{what}: {e}")));
    }
    if let Some(path) = s.strip_prefix('@') {
        return read_json(Path::new(path));
    }
    short(s).ok_or_else(|| Error::Parse(format!("unknown {what} {s:?}")))
}

fn nums<T: std::str::FromStr>(s: &str) -> Option<Vec<T>> {
    s.split(',').map(|p| p.trim().parse().ok()).collect()
}

/// `Z`, `Z<n>` (e.g. `Z2`), `F<rank>`, `D<n>` for `Zⁿ ⋊ Z/2`.
pub fn group(s: &str) -> Result<GroupSpec> {
    json_or(
        s,
        |s| {
            if s == "Z" {
                return Some(GroupSpec::Z);
            }
            let (head, n) = s.split_at(1);
            let n: usize = n.parse().ok()?;
            match head {
                "Z" => Some(GroupSpec::Zn { n }),
                "F" => Some(GroupSpec::Free { rank: n }),
                "D" => Some(GroupSpec::Semidirect { n }),
                _ => None,
            }
        },
        "group",
    )
}

/// `trivial`, `whole`, `zero-coords:0,1`, `multiples:2`, `elements:0,3`.
pub fn subgroup(s: &str) -> Result<SubgroupSpec> {
    json_or(
        s,
        |s| match s.split_once(':') {
            None if s == "trivial" => Some(SubgroupSpec::Trivial),
            None if s == "whole" => Some(SubgroupSpec::Whole),
            Some(("zero-coords", c)) => Some(SubgroupSpec::ZeroCoords { coords: nums(c)? }),
            Some(("multiples", m)) => Some(SubgroupSpec::Multiples { modulus: m.parse().ok()? }),
            Some(("elements", e)) => Some(SubgroupSpec::Elements { elements: nums(e)? }),
            _ => None,
        },
        "subgroup",
    )
}

/// `translation`, `shift:coord,scale,window`, `cosets:<subgroup>`.
pub fn action(s: &str) -> Result<ActionSpec> {
    if let Some(h) = s.strip_prefix("cosets:") {
        return Ok(ActionSpec::Cosets { subgroup: subgroup(h)? });
    }
    json_or(
        s,
        |s| match s.split_once(':') {
            None if s == "translation" => Some(ActionSpec::Translation),
            Some(("shift", p)) => match nums::<i64>(p)?.as_slice() {
                &[coord, scale, window] if coord >= 0 && window >= 0 => Some(ActionSpec::Shift {
                    coord: coord as usize,
                    scale,
                    window: window as u64,
                }),
                _ => None,
            },
            _ => None,
        },
        "action",
    )
}

pub fn rational(s: &str) -> std::result::Result<Q, String> {
    parse_q(s).map_err(|e| e.to_string())
}

/// A rational or a surd sum such as `1/2*sqrt(2)`.
pub fn real(s: &str) -> std::result::Result<Real, String> {
    s.parse::<Real>().map_err(|e| e.to_string())
}
