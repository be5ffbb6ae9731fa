//! Exact Reeds-Shepp distance.
//!
//! The candidate words are the 48 canonical Reeds-Shepp path types, generated
//! from the base formulas with the time-flip, reflection, and backwards
//! symmetries. Segment lengths are computed on the unit-radius problem and
//! scaled by the turning radius; reverse segments are weighted by the
//! configured reverse penalty before taking the minimum.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::types::Pose;

const ZERO: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsConfig {
    pub turning_radius: f64,
    pub reverse_penalty: f64,
}

impl RsConfig {
    pub fn new(turning_radius: f64, reverse_penalty: f64) -> Self {
        assert!(turning_radius > 0.0, "turning radius must be positive");
        assert!(reverse_penalty >= 1.0, "reverse penalty must be >= 1");
        RsConfig {
            turning_radius,
            reverse_penalty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Steer {
    Left,
    Straight,
    Right,
}

/// One piece of a Reeds-Shepp path. `length` is in meters and signed:
/// negative means the car drives in reverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub steer: Steer,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsPath {
    pub segments: Vec<Segment>,
    /// Length with reverse segments scaled by the reverse penalty.
    pub cost: f64,
}

impl RsPath {
    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length.abs()).sum()
    }
}

use Steer::{Left as L, Right as R, Straight as S};

const WORDS: [[Steer; 5]; 18] = [
    [L, R, L, S, S],
    [R, L, R, S, S],
    [L, R, L, R, S],
    [R, L, R, L, S],
    [L, R, S, L, S],
    [R, L, S, R, S],
    [L, S, R, L, S],
    [R, S, L, R, S],
    [L, R, S, R, S],
    [R, L, S, L, S],
    [R, S, R, L, S],
    [L, S, L, R, S],
    [L, S, R, S, S],
    [R, S, L, S, S],
    [L, S, L, S, S],
    [R, S, R, S, S],
    [L, R, S, L, R],
    [R, L, S, R, L],
];

fn mod2pi(x: f64) -> f64 {
    let v = x.rem_euclid(TAU);
    // map to (-π, π]
    if v > PI {
        v - TAU
    } else {
        v
    }
}

fn polar(x: f64, y: f64) -> (f64, f64) {
    (x.hypot(y), y.atan2(x))
}

fn tau_omega(u: f64, v: f64, xi: f64, eta: f64, phi: f64) -> (f64, f64) {
    let delta = mod2pi(u - v);
    let a = u.sin() - delta.sin();
    let b = u.cos() - delta.cos() - 1.0;
    let t1 = (eta * a - xi * b).atan2(xi * a + eta * b);
    let t2 = 2.0 * (delta.cos() - v.cos() - u.cos()) + 3.0;
    let tau = if t2 < 0.0 { mod2pi(t1 + PI) } else { mod2pi(t1) };
    let omega = mod2pi(tau - u + v - phi);
    (tau, omega)
}

// Base formulas on the unit-radius problem. Each returns (t, u, v).

fn lp_sp_lp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (u, t) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if t >= -ZERO {
        let v = mod2pi(phi - t);
        if v >= -ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_sp_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (u1, t1) = polar(x + phi.sin(), y - 1.0 - phi.cos());
    let u1 = u1 * u1;
    if u1 >= 4.0 {
        let u = (u1 - 4.0).sqrt();
        let theta = 2.0_f64.atan2(u);
        let t = mod2pi(t1 + theta);
        let v = mod2pi(t - phi);
        if t >= -ZERO && v >= -ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_l(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x - phi.sin();
    let eta = y - 1.0 + phi.cos();
    let (u1, theta) = polar(xi, eta);
    if u1 <= 4.0 {
        let u = -2.0 * (0.25 * u1).asin();
        let t = mod2pi(theta + 0.5 * u + PI);
        let v = mod2pi(phi - t + u);
        if t >= -ZERO && u <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rup_lum_rm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let rho = 0.25 * (2.0 + xi.hypot(eta));
    if rho <= 1.0 {
        let u = rho.acos();
        let (t, v) = tau_omega(u, -u, xi, eta, phi);
        if t >= -ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rum_lum_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let rho = (20.0 - xi * xi - eta * eta) / 16.0;
    if (0.0..=1.0).contains(&rho) {
        let u = -rho.acos();
        if u >= -FRAC_PI_2 {
            let (t, v) = tau_omega(u, u, xi, eta, phi);
            if t >= -ZERO && v >= -ZERO {
                return Some((t, u, v));
            }
        }
    }
    None
}

fn lp_rm_sm_lm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x - phi.sin();
    let eta = y - 1.0 + phi.cos();
    let (rho, theta) = polar(xi, eta);
    if rho >= 2.0 {
        let r = (rho * rho - 4.0).sqrt();
        let u = 2.0 - r;
        let t = mod2pi(theta + r.atan2(-2.0));
        let v = mod2pi(phi - FRAC_PI_2 - t);
        if t >= -ZERO && u <= ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_sm_rm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let (rho, theta) = polar(-eta, xi);
    if rho >= 2.0 {
        let t = theta;
        let u = 2.0 - rho;
        let v = mod2pi(t + FRAC_PI_2 - phi);
        if t >= -ZERO && u <= ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_s_lm_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let (rho, _) = polar(xi, eta);
    if rho >= 2.0 {
        let u = 4.0 - (rho * rho - 4.0).sqrt();
        if u <= ZERO {
            let t = mod2pi(((4.0 - u) * xi - 2.0 * eta).atan2(-2.0 * xi + (u - 4.0) * eta));
            let v = mod2pi(t - phi);
            if t >= -ZERO && v >= -ZERO {
                return Some((t, u, v));
            }
        }
    }
    None
}

/// Visits every feasible candidate word for the unit-radius problem
/// `(x, y, phi)` as `(word index, unit lengths)`.
fn for_each_candidate(x: f64, y: f64, phi: f64, mut visit: impl FnMut(usize, [f64; 5])) {
    let hp = FRAC_PI_2;
    let xb = x * phi.cos() + y * phi.sin();
    let yb = x * phi.sin() - y * phi.cos();

    // CSC
    if let Some((t, u, v)) = lp_sp_lp(x, y, phi) {
        visit(14, [t, u, v, 0.0, 0.0]);
    }
    if let Some((t, u, v)) = lp_sp_lp(-x, y, -phi) {
        visit(14, [-t, -u, -v, 0.0, 0.0]);
    }
    if let Some((t, u, v)) = lp_sp_lp(x, -y, -phi) {
        visit(15, [t, u, v, 0.0, 0.0]);
    }
    if let Some((t, u, v)) = lp_sp_lp(-x, -y, phi) {
        visit(15, [-t, -u, -v, 0.0, 0.0]);
    }
    if let Some((t, u, v)) = lp_sp_rp(x, y, phi) {
        visit(12, [t, u, v, 0.0, 0.0]);
    }
    if let Some((t, u, v)) = lp_sp_rp(-x, y, -phi) {
        visit(12, [-t, -u, -v, 0.0, 0.0]);
    }
    if let Some((t, u, v)) = lp_sp_rp(x, -y, -phi) {
        visit(13, [t, u, v, 0.0, 0.0]);
    }
    if let Some((t, u, v)) = lp_sp_rp(-x, -y, phi) {
        visit(13, [-t, -u, -v, 0.0, 0.0]);
    }

    // CCC
    if let Some((t, u, v)) = lp_rm_l(x, y, phi) {
        visit(0, [t, u, v, 0.0, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_l(-x, y, -phi) {
        visit(0, [-t, -u, -v, 0.0, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_l(x, -y, -phi) {
        visit(1, [t, u, v, 0.0, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_l(-x, -y, phi) {
        visit(1, [-t, -u, -v, 0.0, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_l(xb, yb, phi) {
        visit(0, [v, u, t, 0.0, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_l(-xb, yb, -phi) {
        visit(0, [-v, -u, -t, 0.0, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_l(xb, -yb, -phi) {
        visit(1, [v, u, t, 0.0, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_l(-xb, -yb, phi) {
        visit(1, [-v, -u, -t, 0.0, 0.0]);
    }

    // CCCC
    if let Some((t, u, v)) = lp_rup_lum_rm(x, y, phi) {
        visit(2, [t, u, -u, v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rup_lum_rm(-x, y, -phi) {
        visit(2, [-t, -u, u, -v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rup_lum_rm(x, -y, -phi) {
        visit(3, [t, u, -u, v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rup_lum_rm(-x, -y, phi) {
        visit(3, [-t, -u, u, -v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rum_lum_rp(x, y, phi) {
        visit(2, [t, u, u, v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rum_lum_rp(-x, y, -phi) {
        visit(2, [-t, -u, -u, -v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rum_lum_rp(x, -y, -phi) {
        visit(3, [t, u, u, v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rum_lum_rp(-x, -y, phi) {
        visit(3, [-t, -u, -u, -v, 0.0]);
    }

    // CCSC
    if let Some((t, u, v)) = lp_rm_sm_lm(x, y, phi) {
        visit(4, [t, -hp, u, v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_lm(-x, y, -phi) {
        visit(4, [-t, hp, -u, -v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_lm(x, -y, -phi) {
        visit(5, [t, -hp, u, v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_lm(-x, -y, phi) {
        visit(5, [-t, hp, -u, -v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_rm(x, y, phi) {
        visit(8, [t, -hp, u, v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_rm(-x, y, -phi) {
        visit(8, [-t, hp, -u, -v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_rm(x, -y, -phi) {
        visit(9, [t, -hp, u, v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_rm(-x, -y, phi) {
        visit(9, [-t, hp, -u, -v, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_lm(xb, yb, phi) {
        visit(6, [v, u, -hp, t, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_lm(-xb, yb, -phi) {
        visit(6, [-v, -u, hp, -t, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_lm(xb, -yb, -phi) {
        visit(7, [v, u, -hp, t, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_lm(-xb, -yb, phi) {
        visit(7, [-v, -u, hp, -t, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_rm(xb, yb, phi) {
        visit(10, [v, u, -hp, t, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_rm(-xb, yb, -phi) {
        visit(10, [-v, -u, hp, -t, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_rm(xb, -yb, -phi) {
        visit(11, [v, u, -hp, t, 0.0]);
    }
    if let Some((t, u, v)) = lp_rm_sm_rm(-xb, -yb, phi) {
        visit(11, [-v, -u, hp, -t, 0.0]);
    }

    // CCSCC
    if let Some((t, u, v)) = lp_rm_s_lm_rp(x, y, phi) {
        visit(16, [t, -hp, u, -hp, v]);
    }
    if let Some((t, u, v)) = lp_rm_s_lm_rp(-x, y, -phi) {
        visit(16, [-t, hp, -u, hp, -v]);
    }
    if let Some((t, u, v)) = lp_rm_s_lm_rp(x, -y, -phi) {
        visit(17, [t, -hp, u, -hp, v]);
    }
    if let Some((t, u, v)) = lp_rm_s_lm_rp(-x, -y, phi) {
        visit(17, [-t, hp, -u, hp, -v]);
    }
}

/// Goal pose expressed in the frame of `from`, scaled to unit turning radius.
fn relative_unit(from: &Pose, to: &Pose, radius: f64) -> (f64, f64, f64) {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let (s, c) = from.theta.sin_cos();
    let x = (c * dx + s * dy) / radius;
    let y = (-s * dx + c * dy) / radius;
    (x, y, to.theta - from.theta)
}

fn weighted(lengths: &[f64; 5], reverse_penalty: f64) -> f64 {
    lengths
        .iter()
        .map(|&l| if l < 0.0 { -l * reverse_penalty } else { l })
        .sum()
}

/// Minimum weighted Reeds-Shepp length from `from` to `to`.
pub fn rs_exact(from: &Pose, to: &Pose, cfg: &RsConfig) -> f64 {
    if from == to {
        return 0.0;
    }
    let (x, y, phi) = relative_unit(from, to, cfg.turning_radius);
    let mut best = f64::INFINITY;
    for_each_candidate(x, y, phi, |_, lengths| {
        best = best.min(weighted(&lengths, cfg.reverse_penalty));
    });
    best * cfg.turning_radius
}

/// The minimizing path of [`rs_exact`], with zero-length segments dropped.
pub fn rs_path(from: &Pose, to: &Pose, cfg: &RsConfig) -> RsPath {
    let (x, y, phi) = relative_unit(from, to, cfg.turning_radius);
    let mut best: Option<(f64, usize, [f64; 5])> = None;
    for_each_candidate(x, y, phi, |word, lengths| {
        let cost = weighted(&lengths, cfg.reverse_penalty);
        if best.is_none_or(|(c, _, _)| cost < c) {
            best = Some((cost, word, lengths));
        }
    });
    let Some((cost, word, lengths)) = best else {
        return RsPath {
            segments: Vec::new(),
            cost: 0.0,
        };
    };
    let segments = WORDS[word]
        .iter()
        .zip(lengths)
        .filter(|(_, l)| l.abs() > 1e-12)
        .map(|(&steer, l)| Segment {
            steer,
            length: l * cfg.turning_radius,
        })
        .collect();
    RsPath {
        segments,
        cost: cost * cfg.turning_radius,
    }
}

/// Pose reached by driving `length` meters (negative: reverse) with `steer`
/// on a circle of radius `turning_radius`.
pub fn advance(pose: &Pose, steer: Steer, length: f64, turning_radius: f64) -> Pose {
    let (s, c) = pose.theta.sin_cos();
    match steer {
        Steer::Straight => Pose::new(pose.x + length * c, pose.y + length * s, pose.theta),
        Steer::Left | Steer::Right => {
            let sign = if steer == Steer::Left { 1.0 } else { -1.0 };
            let dtheta = sign * length / turning_radius;
            let theta = pose.theta + dtheta;
            // rotate about the instantaneous center of curvature
            let r = sign * turning_radius;
            Pose::new(
                pose.x + r * (theta.sin() - s),
                pose.y - r * (theta.cos() - c),
                theta,
            )
        }
    }
}

impl RsPath {
    /// Poses obtained by walking the path from `start` in pieces no longer than
    /// `step`, breaking at every segment boundary. The returned list excludes
    /// `start`; each element carries the steer and signed length of the piece
    /// that produced it.
    pub fn sample(&self, start: &Pose, step: f64, turning_radius: f64) -> Vec<(Pose, Steer, f64)> {
        let mut out = Vec::new();
        let mut pose = *start;
        for seg in &self.segments {
            let total = seg.length.abs();
            let dir = seg.length.signum();
            let mut done = 0.0;
            while total - done > 1e-9 {
                let piece = step.min(total - done);
                pose = advance(&pose, seg.steer, dir * piece, turning_radius);
                out.push((pose, seg.steer, dir * piece));
                done += piece;
            }
        }
        out
    }

    pub fn end_pose(&self, start: &Pose, turning_radius: f64) -> Pose {
        self.segments
            .iter()
            .fold(*start, |p, s| advance(&p, s.steer, s.length, turning_radius))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::angle_diff;
    use proptest::prelude::*;

    fn cfg() -> RsConfig {
        RsConfig::new(3.0, 1.0)
    }

    #[test]
    fn identity_is_zero() {
        let p = Pose::new(3.0, -2.0, 1.0);
        assert_eq!(rs_exact(&p, &p, &cfg()), 0.0);
    }

    #[test]
    fn aligned_straight_line() {
        for d in [0.1, 1.0, 7.5, 40.0] {
            let v = rs_exact(&Pose::new(0.0, 0.0, 0.0), &Pose::new(d, 0.0, 0.0), &cfg());
            assert!((v - d).abs() < 1e-9, "d={d} v={v}");
        }
    }

    #[test]
    fn straight_reverse_pays_the_penalty() {
        let c = RsConfig::new(3.0, 2.0);
        let v = rs_exact(&Pose::new(5.0, 0.0, 0.0), &Pose::new(0.0, 0.0, 0.0), &c);
        // reversing 5 m costs 10; no forward-only maneuver is cheaper than that
        assert!(v <= 10.0 + 1e-9, "{v}");
        assert!(v >= 5.0);
    }

    #[test]
    fn quarter_turn_is_a_quarter_circle() {
        let r = 3.0;
        let v = rs_exact(&Pose::new(0.0, 0.0, 0.0), &Pose::new(r, r, FRAC_PI_2), &cfg());
        assert!((v - FRAC_PI_2 * r).abs() < 1e-9, "{v}");
    }

    #[test]
    fn path_reaches_its_target() {
        let from = Pose::new(1.0, 2.0, 0.3);
        let to = Pose::new(-4.0, 5.0, 2.5);
        let path = rs_path(&from, &to, &cfg());
        let end = path.end_pose(&from, 3.0);
        assert!(end.distance(&to) < 1e-6);
        assert!(angle_diff(end.theta, to.theta) < 1e-6);
        assert!((path.cost - rs_exact(&from, &to, &cfg())).abs() < 1e-12);
    }

    #[test]
    fn sampling_respects_step_and_segment_breaks() {
        let from = Pose::new(0.0, 0.0, 0.0);
        let to = Pose::new(-3.0, 4.0, 4.0);
        let path = rs_path(&from, &to, &cfg());
        let samples = path.sample(&from, 0.7, 3.0);
        let walked: f64 = samples.iter().map(|(_, _, l)| l.abs()).sum();
        assert!((walked - path.length()).abs() < 1e-9);
        assert!(samples.iter().all(|(_, _, l)| l.abs() <= 0.7 + 1e-12));
        let last = samples.last().unwrap().0;
        assert!(last.distance(&to) < 1e-6);
    }

    fn pose_strategy() -> impl Strategy<Value = Pose> {
        (-30.0..30.0f64, -30.0..30.0f64, 0.0..TAU).prop_map(|(x, y, t)| Pose::new(x, y, t))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn every_candidate_word_reaches_the_goal(a in pose_strategy(), b in pose_strategy()) {
            let c = cfg();
            let (x, y, phi) = relative_unit(&a, &b, c.turning_radius);
            for_each_candidate(x, y, phi, |word, lengths| {
                let end = WORDS[word].iter().zip(lengths).fold(a, |p, (&s, l)| advance(&p, s, l * c.turning_radius, c.turning_radius));
                assert!(end.distance(&b) < 1e-6, "word {word} ends {end:?} not {b:?}");
                assert!(angle_diff(end.theta, b.theta) < 1e-6);
            });
        }

        #[test]
        fn at_least_euclidean(a in pose_strategy(), b in pose_strategy(), pen in 1.0..3.0f64) {
            let c = RsConfig::new(2.5, pen);
            prop_assert!(rs_exact(&a, &b, &c) >= a.distance(&b) - 1e-9);
        }

        #[test]
        fn rigid_transform_invariance(
            a in pose_strategy(), b in pose_strategy(),
            tx in -50.0..50.0f64, ty in -50.0..50.0f64, rot in 0.0..TAU,
        ) {
            let c = RsConfig::new(3.0, 1.5);
            let move_pose = |p: &Pose| {
                let (s, co) = rot.sin_cos();
                Pose::new(co * p.x - s * p.y + tx, s * p.x + co * p.y + ty, p.theta + rot)
            };
            let d0 = rs_exact(&a, &b, &c);
            let d1 = rs_exact(&move_pose(&a), &move_pose(&b), &c);
            prop_assert!((d0 - d1).abs() <= 1e-9 * d0.max(1.0), "{d0} vs {d1}");
        }

        #[test]
        fn symmetric_without_penalty(a in pose_strategy(), b in pose_strategy()) {
            let c = cfg();
            let d0 = rs_exact(&a, &b, &c);
            let d1 = rs_exact(&b, &a, &c);
            prop_assert!((d0 - d1).abs() <= 1e-9 * d0.max(1.0));
        }
    }
}
