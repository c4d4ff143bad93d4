//! Equiangular spherical distance signal: the sphere around the cloud
//! centroid is split into W x H longitude/colatitude cells, and each cell
//! stores the distance of the farthest point binned into it (0 when empty).
//!
//! The signal is computed in the normalized frame, which makes it
//! translation-invariant, and rotating a cloud about the polar axis by a
//! whole number of cells shifts the signal circularly along the longitude
//! axis.

use crate::error::{Error, Result};
use crate::geom::{Frame, PointCloud, Vec3};

/// Cell layout: cell `(j, k)` covers longitude `[2 pi j / W, 2 pi (j+1) / W)`
/// and colatitude `[pi k / H, pi (k+1) / H)`, with `k = 0` at the +z pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SphericalGrid {
    pub width: usize,
    pub height: usize,
}

impl SphericalGrid {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::Degenerate("spherical grid needs W, H >= 2"));
        }
        Ok(Self { width, height })
    }

    /// 64 x 64, the default encoder input resolution.
    pub const DEFAULT: SphericalGrid = SphericalGrid { width: 64, height: 64 };

    pub fn cells(&self) -> usize {
        self.width * self.height
    }
}

/// Longitude of `p` in [0, 2 pi); `atan2(0, 0)` maps to 0 so poles land in
/// column 0.
fn longitude(p: Vec3) -> f64 {
    let lon = p.y.atan2(p.x);
    if lon < 0.0 {
        lon + std::f64::consts::TAU
    } else {
        lon
    }
}

/// Bin a nonzero point: `j = floor(W lon / 2pi) mod W`,
/// `k = clamp(floor(H colat / pi), 0, H-1)`.
pub fn bin_index(p: Vec3, grid: &SphericalGrid) -> Result<(usize, usize)> {
    let r = p.norm();
    if r == 0.0 {
        return Err(Error::Degenerate("cannot bin the zero vector"));
    }
    if !p.is_finite() {
        return Err(Error::NonFinite("bin input"));
    }
    let w = grid.width as f64;
    let h = grid.height as f64;
    let j = ((longitude(p) / std::f64::consts::TAU * w).floor() as usize) % grid.width;
    let colat = (p.z / r).clamp(-1.0, 1.0).acos();
    let k = ((colat / std::f64::consts::PI * h).floor() as usize).min(grid.height - 1);
    Ok((j, k))
}

/// Dense W x H farthest-distance grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalSignal {
    pub grid: SphericalGrid,
    /// Row-major over colatitude rows: `values[k * W + j]`.
    pub values: Vec<f64>,
}

impl SphericalSignal {
    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.values[k * self.grid.width + j]
    }

    /// Circular shift along longitude by `m` columns (column j of the output
    /// is column j - m of the input).
    pub fn shifted_columns(&self, m: usize) -> SphericalSignal {
        let w = self.grid.width;
        let mut values = vec![0.0; self.values.len()];
        for k in 0..self.grid.height {
            for j in 0..w {
                values[k * w + (j + m) % w] = self.values[k * w + j];
            }
        }
        SphericalSignal { grid: self.grid, values }
    }
}

/// Encodes a normalized cloud: each point contributes its norm to its cell,
/// cells keep the max, empty cells stay 0. The cloud must be in the
/// normalized frame so all values land in [0, 1].
pub fn encode_signal(cloud: &PointCloud, grid: &SphericalGrid) -> Result<SphericalSignal> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if cloud.frame != Frame::Normalized {
        return Err(Error::WrongFrame { expected: Frame::Normalized, found: cloud.frame });
    }
    let mut values = vec![0.0f64; grid.cells()];
    for &p in &cloud.points {
        let r = p.norm();
        if r == 0.0 {
            continue; // the centroid itself carries no direction
        }
        let (j, k) = bin_index(p, grid)?;
        let cell = &mut values[k * grid.width + j];
        if r > *cell {
            *cell = r;
        }
    }
    Ok(SphericalSignal { grid: *grid, values })
}

/// `.sph` wire format: u32-LE width, u32-LE height, then W*H f32-LE values
/// in row-major colatitude-row order.
pub fn write_sph(signal: &SphericalSignal, path: &std::path::Path) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + 4 * signal.values.len());
    buf.extend_from_slice(&(signal.grid.width as u32).to_le_bytes());
    buf.extend_from_slice(&(signal.grid.height as u32).to_le_bytes());
    for &v in &signal.values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_sph(path: &std::path::Path) -> Result<SphericalSignal> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 8 {
        return Err(Error::Parse { what: "sph file", detail: "truncated header".into() });
    }
    let width = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let grid = SphericalGrid::new(width, height)?;
    let expected = 8 + 4 * grid.cells();
    if bytes.len() != expected {
        return Err(Error::Parse {
            what: "sph file",
            detail: format!("expected {expected} bytes, found {}", bytes.len()),
        });
    }
    let values = bytes[8..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(SphericalSignal { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::normalize_unit_sphere;
    use crate::rng::Rng;

    const GRID: SphericalGrid = SphericalGrid { width: 16, height: 16 };

    #[test]
    fn north_pole_bins_to_row_zero_column_zero() {
        let (j, k) = bin_index(Vec3::new(0.0, 0.0, 1.0), &GRID).unwrap();
        assert_eq!((j, k), (0, 0));
    }

    #[test]
    fn x_axis_bins_to_equator_row() {
        let (j, k) = bin_index(Vec3::new(1.0, 0.0, 0.0), &GRID).unwrap();
        assert_eq!(j, 0);
        assert_eq!(k, GRID.height / 2);
    }

    #[test]
    fn zero_vector_is_rejected() {
        assert!(bin_index(Vec3::ZERO, &GRID).is_err());
    }

    #[test]
    fn dense_sphere_covers_every_cell() {
        let mut rng = Rng::new(21);
        let mut counts = vec![0usize; GRID.cells()];
        for _ in 0..100_000 {
            // Uniform direction via normalized gaussian.
            let p = Vec3::new(rng.normal(), rng.normal(), rng.normal());
            if p.norm() < 1e-9 {
                continue;
            }
            let (j, k) = bin_index(p, &GRID).unwrap();
            counts[k * GRID.width + j] += 1;
        }
        assert!(counts.iter().all(|&c| c >= 1));
    }

    #[test]
    fn single_point_lights_exactly_one_cell() {
        let cloud = PointCloud::new(
            vec![Vec3::new(0.7, 0.0, 0.0).normalized() * 0.7],
            Frame::Normalized,
        );
        let sig = encode_signal(&cloud, &GRID).unwrap();
        let nonzero: Vec<(usize, f64)> = sig
            .values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        assert_eq!(nonzero.len(), 1);
        assert!((nonzero[0].1 - 0.7).abs() < 1e-12);
    }

    #[test]
    fn same_cell_keeps_farthest_distance() {
        let dir = Vec3::new(0.3, 0.4, 0.2).normalized();
        let cloud = PointCloud::new(vec![dir * 0.5, dir * 1.0], Frame::Normalized);
        let sig = encode_signal(&cloud, &GRID).unwrap();
        let max = sig.values.iter().cloned().fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
        assert_eq!(sig.values.iter().filter(|&&v| v > 0.0).count(), 1);
    }

    #[test]
    fn signal_requires_normalized_frame() {
        let cloud = PointCloud::new(vec![Vec3::new(0.0, 0.0, 3.0)], Frame::Camera);
        assert!(matches!(encode_signal(&cloud, &GRID), Err(Error::WrongFrame { .. })));
    }

    #[test]
    fn signal_invariant_to_order_and_duplicates() {
        let mut rng = Rng::new(33);
        let pts: Vec<Vec3> = (0..200)
            .map(|_| Vec3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)))
            .collect();
        let cloud = PointCloud::new(pts.clone(), Frame::Camera);
        let (normed, _, _) = normalize_unit_sphere(&cloud).unwrap();
        let sig = encode_signal(&normed, &GRID).unwrap();

        let mut reversed = normed.clone();
        reversed.points.reverse();
        let mut doubled = normed.clone();
        doubled.points.extend(normed.points.iter().copied());
        assert_eq!(sig, encode_signal(&reversed, &GRID).unwrap());
        assert_eq!(sig, encode_signal(&doubled, &GRID).unwrap());
        assert!(sig.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn values_match_independent_binning() {
        // Brute-force oracle with its own trigonometry.
        let mut rng = Rng::new(55);
        let pts: Vec<Vec3> = (0..500)
            .map(|_| Vec3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)))
            .collect();
        let (normed, _, _) = normalize_unit_sphere(&PointCloud::new(pts, Frame::Camera)).unwrap();
        let sig = encode_signal(&normed, &GRID).unwrap();

        let mut oracle = vec![0.0f64; GRID.cells()];
        for &p in &normed.points {
            let r = (p.x * p.x + p.y * p.y + p.z * p.z).sqrt();
            if r == 0.0 {
                continue;
            }
            let mut lon = f64::atan2(p.y, p.x);
            if lon < 0.0 {
                lon += 2.0 * std::f64::consts::PI;
            }
            let frac = lon / (2.0 * std::f64::consts::PI);
            let j = ((frac * GRID.width as f64) as usize).min(GRID.width - 1);
            let colat = (p.z / r).acos();
            let k = (((colat / std::f64::consts::PI) * GRID.height as f64) as usize)
                .min(GRID.height - 1);
            let c = &mut oracle[k * GRID.width + j];
            if r > *c {
                *c = r;
            }
        }
        assert_eq!(sig.values, oracle);
    }

    #[test]
    fn sph_round_trip() {
        let mut rng = Rng::new(70);
        let values: Vec<f64> = (0..GRID.cells()).map(|_| (rng.next_f64() * 100.0).round() / 100.0).collect();
        let sig = SphericalSignal { grid: GRID, values };
        let dir = std::env::temp_dir().join("ppc_sph_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.sph");
        write_sph(&sig, &path).unwrap();
        let back = read_sph(&path).unwrap();
        assert_eq!(back.grid, sig.grid);
        for (a, b) in sig.values.iter().zip(&back.values) {
            assert!((a - b).abs() < 1e-6); // f32 quantization
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
