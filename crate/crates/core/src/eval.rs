//! Segmentation comparison over the union of the two foregrounds.
//!
//! Label 0 is background; a voxel that is 0 in one labeling and nonzero in
//! the other still counts, with 0 as its label on the empty side.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::volume::{squared_distance_to_sites, Grid, LabelVolume};

/// Joint label counts over the compared voxels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Contingency {
    /// `(a label, b label, count)`, sorted.
    pub cells: Vec<(u32, u32, u64)>,
    pub total: u64,
}

impl Contingency {
    fn marginals(&self) -> (Vec<u64>, Vec<u64>) {
        let mut a: BTreeMap<u32, u64> = BTreeMap::new();
        let mut b: BTreeMap<u32, u64> = BTreeMap::new();
        for &(la, lb, n) in &self.cells {
            *a.entry(la).or_default() += n;
            *b.entry(lb).or_default() += n;
        }
        (a.into_values().collect(), b.into_values().collect())
    }
}

fn check(a: &LabelVolume, b: &LabelVolume) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimsMismatch(a.dims().to_array(), b.dims().to_array()));
    }
    Ok(())
}

pub fn contingency(a: &LabelVolume, b: &LabelVolume) -> Result<Contingency> {
    check(a, b)?;
    let mut map: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut total = 0;
    let mut last: Option<((u32, u32), u64)> = None;
    for (&la, &lb) in a.data().iter().zip(b.data()) {
        if la == 0 && lb == 0 {
            continue;
        }
        total += 1;
        // Runs of equal pairs are common; batch them.
        match &mut last {
            Some((k, n)) if *k == (la, lb) => *n += 1,
            _ => {
                if let Some((k, n)) = last.take() {
                    *map.entry(k).or_default() += n;
                }
                last = Some(((la, lb), 1));
            }
        }
    }
    if let Some((k, n)) = last {
        *map.entry(k).or_default() += n;
    }
    Ok(Contingency {
        cells: map.into_iter().map(|((x, y), n)| (x, y, n)).collect(),
        total,
    })
}

fn pairs(n: u64) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Fraction of voxel pairs on which the two labelings disagree about
/// "same label".
pub fn rand_error(a: &LabelVolume, b: &LabelVolume) -> Result<f64> {
    Ok(rand_error_from(&contingency(a, b)?))
}

pub fn rand_error_from(c: &Contingency) -> f64 {
    if c.total < 2 {
        return 0.0;
    }
    let (ma, mb) = c.marginals();
    let joint: f64 = c.cells.iter().map(|&(_, _, n)| pairs(n)).sum();
    let sa: f64 = ma.iter().map(|&n| pairs(n)).sum();
    let sb: f64 = mb.iter().map(|&n| pairs(n)).sum();
    ((sa + sb - 2.0 * joint) / pairs(c.total)).max(0.0)
}

fn entropy(counts: impl Iterator<Item = u64>, total: u64) -> f64 {
    let t = total as f64;
    counts
        .filter(|&n| n > 0)
        .map(|n| {
            let p = n as f64 / t;
            -p * math::ln(p)
        })
        .sum()
}

/// Variation of information in nats.
pub fn voi(a: &LabelVolume, b: &LabelVolume) -> Result<f64> {
    Ok(voi_from(&contingency(a, b)?))
}

pub fn voi_from(c: &Contingency) -> f64 {
    if c.total == 0 {
        return 0.0;
    }
    let (ma, mb) = c.marginals();
    let hab = entropy(c.cells.iter().map(|x| x.2), c.total);
    let ha = entropy(ma.into_iter(), c.total);
    let hb = entropy(mb.into_iter(), c.total);
    (2.0 * hab - ha - hb).max(0.0)
}

/// Voxels between two different nonzero labels, taken on one side only: a
/// voxel is on the boundary when its +x, +y or +z neighbour carries another
/// nonzero label.
pub fn label_boundary(v: &LabelVolume) -> Vec<bool> {
    let d = v.dims();
    let data = v.data();
    let mut out = alloc::vec![false; data.len()];
    for z in 0..d.nz {
        for y in 0..d.ny {
            for x in 0..d.nx {
                let i = d.index(x, y, z);
                let l = data[i];
                if l == 0 {
                    continue;
                }
                let differs = |j: usize| data[j] != 0 && data[j] != l;
                out[i] = (x + 1 < d.nx && differs(i + 1))
                    || (y + 1 < d.ny && differs(i + d.nx))
                    || (z + 1 < d.nz && differs(i + d.nx * d.ny));
            }
        }
    }
    out
}

/// Foreground voxels with a background 6-neighbour or on the grid edge.
fn outer_surface(v: &LabelVolume) -> Vec<bool> {
    let d = v.dims();
    (0..d.len())
        .map(|i| {
            if v.get(i) == 0 {
                return false;
            }
            let [x, y, z] = d.coords(i);
            let edge = x == 0 || y == 0 || z == 0 || x + 1 == d.nx || y + 1 == d.ny || z + 1 == d.nz;
            edge || d.neighbors6(i).any(|j| v.get(j) == 0)
        })
        .collect()
}

fn directed_mean(from: &[bool], to_sq: &[f64]) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (i, &f) in from.iter().enumerate() {
        if f {
            sum += math::sqrt(to_sq[i]);
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Symmetric mean distance between the two label-boundary sets, in world
/// units. A labeling without inner boundary is measured by its outer
/// surface instead.
pub fn boundary_error(a: &LabelVolume, b: &LabelVolume) -> Result<f64> {
    check(a, b)?;
    let mut ba = label_boundary(a);
    let mut bb = label_boundary(b);
    let (ea, eb) = (!ba.contains(&true), !bb.contains(&true));
    if ea && eb {
        return Ok(0.0);
    }
    if ea {
        ba = outer_surface(a);
    }
    if eb {
        bb = outer_surface(b);
    }
    if !ba.contains(&true) || !bb.contains(&true) {
        return Ok(0.0);
    }
    let da = squared_distance_to_sites(a.dims(), a.spacing(), &ba);
    let db = squared_distance_to_sites(b.dims(), b.spacing(), &bb);
    Ok(0.5 * (directed_mean(&ba, &db) + directed_mean(&bb, &da)))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub rand_error: f64,
    pub voi: f64,
    pub boundary_error: f64,
    pub contingency: Contingency,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "rand_error,voi,boundary_error";

    pub fn csv_row(&self) -> alloc::string::String {
        alloc::format!("{},{},{}", self.rand_error, self.voi, self.boundary_error)
    }
}

pub fn evaluate(a: &LabelVolume, b: &LabelVolume) -> Result<MetricReport> {
    let c = contingency(a, b)?;
    Ok(MetricReport {
        rand_error: rand_error_from(&c),
        voi: voi_from(&c),
        boundary_error: boundary_error(a, b)?,
        contingency: c,
    })
}

/// For every nonzero label of `truth`, the `pred` label overlapping it most
/// (lowest on ties) and their voxel IoU.
pub fn best_match_iou(truth: &LabelVolume, pred: &LabelVolume) -> Result<Vec<(u32, u32, f64)>> {
    let c = contingency(truth, pred)?;
    let mut size_t: BTreeMap<u32, u64> = BTreeMap::new();
    let mut size_p: BTreeMap<u32, u64> = BTreeMap::new();
    for &(a, b, n) in &c.cells {
        *size_t.entry(a).or_default() += n;
        *size_p.entry(b).or_default() += n;
    }
    let mut out = Vec::new();
    for (&lt, &nt) in size_t.iter().filter(|(l, _)| **l != 0) {
        let best = c
            .cells
            .iter()
            .filter(|x| x.0 == lt && x.1 != 0)
            .fold(None::<(u32, u64)>, |acc, &(_, lp, n)| match acc {
                Some((_, m)) if m >= n => acc,
                _ => Some((lp, n)),
            });
        out.push(match best {
            Some((lp, n)) => (lt, lp, n as f64 / (nt + size_p[&lp] - n) as f64),
            None => (lt, 0, 0.0),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Dims, Spacing};
    use alloc::vec;

    fn lv(dims: [usize; 3], data: Vec<u32>) -> LabelVolume {
        LabelVolume::new(Dims::new(dims[0], dims[1], dims[2]), Spacing::default(), data).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let a = lv([4, 1, 1], vec![1, 1, 2, 2]);
        let r = evaluate(&a, &a).unwrap();
        assert_eq!((r.rand_error, r.voi, r.boundary_error), (0.0, 0.0, 0.0));
    }

    #[test]
    fn halves_against_one_label() {
        let a = lv([4, 1, 1], vec![1, 1, 2, 2]);
        let b = lv([4, 1, 1], vec![5, 5, 5, 5]);
        // 4 of 6 pairs disagree.
        assert!((rand_error(&a, &b).unwrap() - 4.0 / 6.0).abs() < 1e-15);
        assert!((voi(&a, &b).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn parallel_planes_three_apart() {
        let d = [12, 3, 3];
        let split = |at: usize| lv(d, (0..108).map(|i| if i % 12 < at { 1 } else { 2 }).collect());
        assert!((boundary_error(&split(4), &split(7)).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn background_only_in_one_counts() {
        let a = lv([3, 1, 1], vec![1, 1, 0]);
        let b = lv([3, 1, 1], vec![1, 1, 1]);
        let c = contingency(&a, &b).unwrap();
        assert_eq!(c.total, 3);
        assert_eq!(c.cells, vec![(0, 1, 1), (1, 1, 2)]);
    }

    #[test]
    fn dims_must_match() {
        let a = lv([3, 1, 1], vec![1; 3]);
        let b = lv([1, 3, 1], vec![1; 3]);
        assert!(matches!(rand_error(&a, &b), Err(Error::DimsMismatch(..))));
    }
}
