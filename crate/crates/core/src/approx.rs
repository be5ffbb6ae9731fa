//! Precomputed Reeds-Shepp lookup table with trilinear interpolation.
//!
//! The table stores exact distances from relative configurations
//! `(dx, dy, dtheta)`, expressed in the goal frame, to the goal. Heading is
//! sampled on a closed circle so interpolation wraps at 2π.

use std::f64::consts::TAU;
use std::fs;
use std::io::{Read, Write};
use std::path::Path as FsPath;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::reeds_shepp::{rs_exact, RsConfig};
use crate::types::{normalize_angle, Pose};

/// Axis-aligned box of relative positions covered by the table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl TableBounds {
    pub fn symmetric(half: f64) -> Self {
        TableBounds {
            x_min: -half,
            x_max: half,
            y_min: -half,
            y_max: half,
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableResolution {
    pub nx: usize,
    pub ny: usize,
    pub ntheta: usize,
}

impl Default for TableResolution {
    fn default() -> Self {
        TableResolution {
            nx: 64,
            ny: 64,
            ntheta: 36,
        }
    }
}

/// Number of random relative configurations used to measure `epsilon_table`.
pub const EPSILON_SAMPLES: usize = 200_000;
const EPSILON_SEED: u64 = 0x5eed_ab1e;

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxTable {
    pub rs: RsConfig,
    pub bounds: TableBounds,
    pub resolution: TableResolution,
    values: Vec<f64>,
    /// Largest relative overestimation `approx / exact - 1` seen over the
    /// build-time sample, clamped below at zero.
    pub epsilon_table: f64,
}

impl ApproxTable {
    /// Fills every node with the exact distance and measures `epsilon_table`.
    pub fn build(rs: RsConfig, bounds: TableBounds, resolution: TableResolution) -> Self {
        assert!(
            resolution.nx >= 2 && resolution.ny >= 2 && resolution.ntheta >= 2,
            "each table axis needs at least two nodes"
        );
        assert!(bounds.x_max > bounds.x_min && bounds.y_max > bounds.y_min);
        let mut table = ApproxTable {
            rs,
            bounds,
            resolution,
            values: Vec::with_capacity(resolution.nx * resolution.ny * resolution.ntheta),
            epsilon_table: 0.0,
        };
        let goal = Pose::new(0.0, 0.0, 0.0);
        for i in 0..resolution.nx {
            for j in 0..resolution.ny {
                for k in 0..resolution.ntheta {
                    let from = table.node_pose(i, j, k);
                    table.values.push(rs_exact(&from, &goal, &rs));
                }
            }
        }
        table.epsilon_table = table.measure_epsilon(EPSILON_SAMPLES, EPSILON_SEED);
        table
    }

    /// 64 x 64 x 36 nodes over `[-50, 50]^2`.
    pub fn standard(rs: RsConfig) -> Self {
        Self::build(rs, TableBounds::symmetric(50.0), TableResolution::default())
    }

    fn dx(&self) -> f64 {
        (self.bounds.x_max - self.bounds.x_min) / (self.resolution.nx - 1) as f64
    }

    fn dy(&self) -> f64 {
        (self.bounds.y_max - self.bounds.y_min) / (self.resolution.ny - 1) as f64
    }

    fn dtheta(&self) -> f64 {
        TAU / self.resolution.ntheta as f64
    }

    /// Relative pose of grid node `(i, j, k)` in the goal frame.
    pub fn node_pose(&self, i: usize, j: usize, k: usize) -> Pose {
        Pose::new(
            self.bounds.x_min + i as f64 * self.dx(),
            self.bounds.y_min + j as f64 * self.dy(),
            k as f64 * self.dtheta(),
        )
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        let r = &self.resolution;
        self.values[(i * r.ny + j) * r.ntheta + k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interpolated distance for a relative configuration, or `None` when the
    /// position falls outside the table bounds.
    pub fn lookup(&self, dx: f64, dy: f64, dtheta: f64) -> Option<f64> {
        if !self.bounds.contains(dx, dy) {
            return None;
        }
        let r = &self.resolution;
        let (i, fx) = axis(dx - self.bounds.x_min, self.dx(), r.nx);
        let (j, fy) = axis(dy - self.bounds.y_min, self.dy(), r.ny);
        let ft = normalize_angle(dtheta) / self.dtheta();
        let ft = snap(ft);
        let k0 = (ft.floor() as usize) % r.ntheta;
        let k1 = (k0 + 1) % r.ntheta;
        let ftheta = ft - ft.floor();

        let lerp = |a: f64, b: f64, w: f64| a * (1.0 - w) + b * w;
        let plane = |k: usize| {
            let v00 = self.value(i, j, k);
            let v10 = self.value(i + 1, j, k);
            let v01 = self.value(i, j + 1, k);
            let v11 = self.value(i + 1, j + 1, k);
            lerp(lerp(v00, v10, fx), lerp(v01, v11, fx), fy)
        };
        Some(lerp(plane(k0), plane(k1), ftheta))
    }

    /// Ratio check used at build time: max of `approx / exact - 1` over
    /// `samples` random relative configurations, clamped at 0. Half of the
    /// sample is drawn uniformly over the bounds, half from a box of a few
    /// table cells around the origin where exact distances are small.
    pub fn measure_epsilon(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let goal = Pose::new(0.0, 0.0, 0.0);
        let near = 4.0 * self.dx().max(self.dy());
        let mut worst: f64 = 0.0;
        for n in 0..samples {
            let (x, y) = if n % 2 == 0 {
                (
                    rng.gen_range(self.bounds.x_min..=self.bounds.x_max),
                    rng.gen_range(self.bounds.y_min..=self.bounds.y_max),
                )
            } else {
                (
                    rng.gen_range(-near..=near).clamp(self.bounds.x_min, self.bounds.x_max),
                    rng.gen_range(-near..=near).clamp(self.bounds.y_min, self.bounds.y_max),
                )
            };
            let theta = rng.gen_range(0.0..TAU);
            let exact = rs_exact(&Pose::new(x, y, theta), &goal, &self.rs);
            if exact < 1e-9 {
                continue;
            }
            let approx = self.lookup(x, y, theta).expect("sample inside bounds");
            worst = worst.max(approx / exact - 1.0);
        }
        worst.max(0.0)
    }
}

fn snap(f: f64) -> f64 {
    let r = f.round();
    if (f - r).abs() < 1e-9 {
        r
    } else {
        f
    }
}

/// Lower node index and fractional weight along one axis.
fn axis(offset: f64, step: f64, n: usize) -> (usize, f64) {
    let f = snap(offset / step).clamp(0.0, (n - 1) as f64);
    let i = (f.floor() as usize).min(n - 2);
    (i, f - i as f64)
}

/// Transforms `from` into the frame of `to` and interpolates; falls back to
/// the exact distance when the relative position is outside the table.
pub fn rs_approx(from: &Pose, to: &Pose, table: &ApproxTable) -> f64 {
    if from == to {
        return 0.0;
    }
    let (s, c) = to.theta.sin_cos();
    let dx = from.x - to.x;
    let dy = from.y - to.y;
    let lx = c * dx + s * dy;
    let ly = -s * dx + c * dy;
    match table.lookup(lx, ly, from.theta - to.theta) {
        Some(v) => v,
        None => rs_exact(from, to, &table.rs),
    }
}

const MAGIC: &[u8; 8] = b"RSTABLE1";

impl ApproxTable {
    /// Writes the binary cache file: magic, header, then little-endian values.
    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(128 + 8 * self.values.len());
        buf.extend_from_slice(MAGIC);
        for v in self.header_floats() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for n in [self.resolution.nx, self.resolution.ny, self.resolution.ntheta] {
            buf.extend_from_slice(&(n as u64).to_le_bytes());
        }
        buf.extend_from_slice(&self.epsilon_table.to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(path, e))
    }

    fn header_floats(&self) -> [f64; 6] {
        [
            self.rs.turning_radius,
            self.rs.reverse_penalty,
            self.bounds.x_min,
            self.bounds.x_max,
            self.bounds.y_min,
            self.bounds.y_max,
        ]
    }

    /// Reads a table saved by [`ApproxTable::save`] if its header matches the
    /// requested configuration; `Ok(None)` on mismatch.
    pub fn load_matching(
        path: impl AsRef<FsPath>,
        rs: RsConfig,
        bounds: TableBounds,
        resolution: TableResolution,
    ) -> Result<Option<Self>> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        let mut cursor = Cursor { bytes: &bytes, pos: 0 };
        if cursor.take(8) != Some(&MAGIC[..]) {
            return Ok(None);
        }
        let mut header = [0.0; 6];
        for h in &mut header {
            let Some(v) = cursor.f64() else { return Ok(None) };
            *h = v;
        }
        let mut dims = [0usize; 3];
        for d in &mut dims {
            let Some(v) = cursor.u64() else { return Ok(None) };
            *d = v as usize;
        }
        let Some(epsilon_table) = cursor.f64() else { return Ok(None) };
        let mut table = ApproxTable {
            rs,
            bounds,
            resolution,
            values: Vec::new(),
            epsilon_table,
        };
        if header != table.header_floats() || dims != [resolution.nx, resolution.ny, resolution.ntheta] {
            return Ok(None);
        }
        let count = resolution.nx * resolution.ny * resolution.ntheta;
        table.values.reserve(count);
        for _ in 0..count {
            let Some(v) = cursor.f64() else { return Ok(None) };
            table.values.push(v);
        }
        if cursor.pos != bytes.len() {
            return Ok(None);
        }
        Ok(Some(table))
    }

    /// Loads the table at `path` if it matches, otherwise builds it and
    /// (re)writes the file.
    pub fn load_or_build(
        path: impl AsRef<FsPath>,
        rs: RsConfig,
        bounds: TableBounds,
        resolution: TableResolution,
    ) -> Result<Self> {
        let path = path.as_ref();
        if path.exists() {
            if let Some(t) = Self::load_matching(path, rs, bounds, resolution)? {
                return Ok(t);
            }
            log::info!("table cache {} does not match, rebuilding", path.display());
        }
        let table = Self::build(rs, bounds, resolution);
        table.save(path)?;
        Ok(table)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    fn f64(&mut self) -> Option<f64> {
        Some(f64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }

    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ApproxTable {
        ApproxTable::build(
            RsConfig::new(1.0, 1.0),
            TableBounds::symmetric(1.0),
            TableResolution {
                nx: 2,
                ny: 2,
                ntheta: 2,
            },
        )
    }

    #[test]
    fn two_by_two_by_two_holds_eight_exact_values() {
        let t = tiny();
        assert_eq!(t.values().len(), 8);
        let goal = Pose::new(0.0, 0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let exact = rs_exact(&t.node_pose(i, j, k), &goal, &t.rs);
                    assert_eq!(t.value(i, j, k), exact);
                }
            }
        }
    }

    #[test]
    fn nodes_interpolate_to_stored_values() {
        let t = ApproxTable::build(
            RsConfig::new(2.0, 1.0),
            TableBounds::symmetric(10.0),
            TableResolution {
                nx: 9,
                ny: 7,
                ntheta: 12,
            },
        );
        let goal = Pose::new(0.0, 0.0, 0.0);
        for i in 0..9 {
            for j in 0..7 {
                for k in 0..12 {
                    let p = t.node_pose(i, j, k);
                    assert_eq!(rs_approx(&p, &goal, &t), t.value(i, j, k), "node {i},{j},{k}");
                }
            }
        }
    }

    #[test]
    fn heading_wraps_without_a_seam() {
        let t = ApproxTable::build(
            RsConfig::new(2.0, 1.0),
            TableBounds::symmetric(8.0),
            TableResolution {
                nx: 5,
                ny: 5,
                ntheta: 8,
            },
        );
        let a = t.lookup(2.0, 2.0, TAU - 1e-12).unwrap();
        let b = t.lookup(2.0, 2.0, 0.0).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn outside_bounds_falls_back_to_exact() {
        let t = tiny();
        let from = Pose::new(5.0, 0.5, 1.0);
        let to = Pose::new(0.0, 0.0, 0.0);
        assert_eq!(rs_approx(&from, &to, &t), rs_exact(&from, &to, &t.rs));
        assert_eq!(rs_approx(&to, &to, &t), 0.0);
    }

    #[test]
    fn binary_cache_round_trip_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("table.bin");
        let rs = RsConfig::new(1.5, 1.0);
        let bounds = TableBounds::symmetric(4.0);
        let res = TableResolution {
            nx: 4,
            ny: 3,
            ntheta: 6,
        };
        let built = ApproxTable::load_or_build(&file, rs, bounds, res).unwrap();
        let loaded = ApproxTable::load_matching(&file, rs, bounds, res).unwrap().unwrap();
        assert_eq!(built, loaded);
        let other = TableResolution { nx: 5, ..res };
        assert!(ApproxTable::load_matching(&file, rs, bounds, other).unwrap().is_none());
        let rebuilt = ApproxTable::load_or_build(&file, rs, bounds, other).unwrap();
        assert_eq!(rebuilt.resolution, other);
        assert!(ApproxTable::load_matching(&file, rs, bounds, other).unwrap().is_some());
    }
}
