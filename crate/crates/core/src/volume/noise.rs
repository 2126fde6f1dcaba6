use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::components::keep_largest;
use super::{BinaryVolume, Connectivity, Grid};
use crate::error::{Error, Result};

/// What [`add_impulse_noise_with_report`] changed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NoiseReport {
    /// Surface voxels of the input.
    pub surface: usize,
    /// Surface voxels that drew a toggle.
    pub toggled: usize,
    pub added: usize,
    pub removed: usize,
    /// Foreground voxels dropped as specks after toggling.
    pub specks: usize,
}

/// Impulse noise on the object surface; see [`add_impulse_noise_with_report`].
pub fn add_impulse_noise(vol: &BinaryVolume, density: f64, seed: u64) -> Result<BinaryVolume> {
    add_impulse_noise_with_report(vol, density, seed).map(|(v, _)| v)
}

/// Every surface voxel (foreground with a background face neighbour) is hit
/// with probability `density`. A hit either grows the object into one of
/// the voxel's in-grid background face neighbours, chosen uniformly, or
/// erodes the voxel itself, with equal odds. Only the largest 6-connected
/// component is kept afterwards.
pub fn add_impulse_noise_with_report(
    vol: &BinaryVolume,
    density: f64,
    seed: u64,
) -> Result<(BinaryVolume, NoiseReport)> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidParameter {
            name: "density",
            value: density,
        });
    }
    let mut out = vol.clone();
    let mut report = NoiseReport::default();
    if density == 0.0 {
        report.surface = vol.foreground().filter(|&i| vol.is_surface(i)).count();
        return Ok((out, report));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = vol.dims();
    let mut bg = Vec::with_capacity(6);
    for i in 0..dims.len() {
        if !vol.is_surface(i) {
            continue;
        }
        report.surface += 1;
        if unit(&mut rng) >= density {
            continue;
        }
        report.toggled += 1;
        let grow = rng.next_u32() & 1 == 1;
        bg.clear();
        bg.extend(dims.neighbors6(i).filter(|&j| !vol.get(j)));
        if grow && !bg.is_empty() {
            let j = bg[(rng.next_u64() % bg.len() as u64) as usize];
            if !out.get(j) {
                out.set(j, true);
                report.added += 1;
            }
        } else if out.get(i) {
            out.set(i, false);
            report.removed += 1;
        }
    }
    let before = out.count();
    keep_largest(&mut out, Connectivity::Six);
    report.specks = before - out.count();
    Ok((out, report))
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::volume::{Dims, Spacing};

    fn ball(n: usize, r: f64) -> BinaryVolume {
        let d = Dims::new(n, n, n);
        let c = (n as f64 - 1.0) / 2.0;
        let data = (0..d.len())
            .map(|i| {
                let [x, y, z] = d.coords(i);
                Vec3::new(x as f64 - c, y as f64 - c, z as f64 - c).norm() <= r
            })
            .collect();
        BinaryVolume::new(d, Spacing::UNIT, data).unwrap()
    }

    #[test]
    fn zero_density_is_identity() {
        let b = ball(20, 7.0);
        assert_eq!(add_impulse_noise(&b, 0.0, 3).unwrap(), b);
    }

    #[test]
    fn seeded_runs_match() {
        let b = ball(24, 9.0);
        let x = add_impulse_noise(&b, 0.6, 11).unwrap();
        assert_eq!(x, add_impulse_noise(&b, 0.6, 11).unwrap());
        assert_ne!(x, add_impulse_noise(&b, 0.6, 12).unwrap());
    }

    #[test]
    fn toggle_fraction_tracks_density() {
        let b = ball(36, 15.0);
        let (_, r) = add_impulse_noise_with_report(&b, 0.35, 5).unwrap();
        let frac = r.toggled as f64 / r.surface as f64;
        assert!((0.25..=0.45).contains(&frac), "{frac}");
    }

    #[test]
    fn rejects_bad_density() {
        let b = ball(8, 2.0);
        assert!(add_impulse_noise(&b, 1.5, 0).is_err());
        assert!(add_impulse_noise(&b, -0.1, 0).is_err());
    }
}
