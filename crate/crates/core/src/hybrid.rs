//! Distance-thresholded switch between the interpolated and exact Reeds-Shepp
//! distance. The threshold shrinks linearly from `tau_init` to `tau_final` as
//! the search's g-value approaches `estimated_max_g`.

use crate::approx::{rs_approx, ApproxTable};
use crate::reeds_shepp::{rs_exact, RsConfig};
use crate::types::Pose;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridConfig {
    pub tau_init: f64,
    pub tau_final: f64,
    pub estimated_max_g: f64,
}

impl HybridConfig {
    pub fn new(tau_init: f64, tau_final: f64, estimated_max_g: f64) -> Self {
        assert!(tau_init >= tau_final && tau_final >= 0.0, "need tau_init >= tau_final >= 0");
        assert!(estimated_max_g > 0.0, "estimated_max_g must be positive");
        HybridConfig {
            tau_init,
            tau_final,
            estimated_max_g,
        }
    }

    /// Defaults for one search: `tau_init` is a quarter of the map diagonal,
    /// `tau_final` two turning radii, and `estimated_max_g` twice the exact
    /// start-to-goal distance.
    pub fn for_search(map_diagonal: f64, rs: &RsConfig, start: &Pose, goal: &Pose, min_g: f64) -> Self {
        let tau_final = 2.0 * rs.turning_radius;
        let tau_init = (map_diagonal / 4.0).max(tau_final);
        let estimated_max_g = (2.0 * rs_exact(start, goal, rs)).max(min_g);
        HybridConfig::new(tau_init, tau_final, estimated_max_g)
    }

    pub fn threshold(&self, g_value: f64) -> f64 {
        let progress = (g_value / self.estimated_max_g).clamp(0.0, 1.0);
        self.tau_init - (self.tau_init - self.tau_final) * progress
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Approximate,
    Exact,
}

/// Returns the heuristic value and which branch produced it.
pub fn hybrid_h(
    s: &Pose,
    g: &Pose,
    g_value: f64,
    cfg: &HybridConfig,
    table: &ApproxTable,
    rs: &RsConfig,
) -> (f64, Branch) {
    let d = s.distance(g);
    if d > cfg.threshold(g_value) {
        (rs_approx(s, g, table), Branch::Approximate)
    } else {
        (rs_exact(s, g, rs), Branch::Exact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{TableBounds, TableResolution};

    fn table() -> ApproxTable {
        ApproxTable::build(
            RsConfig::new(3.0, 1.0),
            TableBounds::symmetric(30.0),
            TableResolution {
                nx: 16,
                ny: 16,
                ntheta: 12,
            },
        )
    }

    #[test]
    fn zero_distance_is_exact_zero() {
        let t = table();
        let p = Pose::new(4.0, 4.0, 1.0);
        let cfg = HybridConfig::new(10.0, 6.0, 50.0);
        assert_eq!(hybrid_h(&p, &p, 0.0, &cfg, &t, &t.rs), (0.0, Branch::Exact));
    }

    #[test]
    fn far_at_search_start_uses_the_table() {
        let t = table();
        let cfg = HybridConfig::new(10.0, 6.0, 50.0);
        let s = Pose::new(0.0, 0.0, 0.3);
        let g = Pose::new(15.0, 2.0, 0.0);
        let (v, branch) = hybrid_h(&s, &g, 0.0, &cfg, &t, &t.rs);
        assert_eq!(branch, Branch::Approximate);
        assert_eq!(v, rs_approx(&s, &g, &t));
    }

    #[test]
    fn final_threshold_zero_only_exact_at_the_goal() {
        let t = table();
        let cfg = HybridConfig::new(10.0, 0.0, 20.0);
        let g = Pose::new(5.0, 5.0, 0.0);
        let near = Pose::new(5.01, 5.0, 0.0);
        assert_eq!(hybrid_h(&near, &g, 20.0, &cfg, &t, &t.rs).1, Branch::Approximate);
        assert_eq!(hybrid_h(&g, &g, 20.0, &cfg, &t, &t.rs).1, Branch::Exact);
    }

    #[test]
    fn threshold_is_non_increasing_in_g() {
        let cfg = HybridConfig::new(17.7, 6.0, 40.0);
        let mut last = f64::INFINITY;
        for i in 0..200 {
            let tau = cfg.threshold(i as f64 * 0.5);
            assert!(tau <= last);
            last = tau;
        }
        assert_eq!(cfg.threshold(0.0), 17.7);
        assert_eq!(cfg.threshold(1e6), 6.0);
    }

    #[test]
    fn search_defaults() {
        let rs = RsConfig::new(3.0, 1.0);
        let start = Pose::new(0.0, 0.0, 0.0);
        let goal = Pose::new(20.0, 0.0, 0.0);
        let cfg = HybridConfig::for_search(50.0 * 2f64.sqrt(), &rs, &start, &goal, 1.0);
        assert!((cfg.tau_init - 50.0 * 2f64.sqrt() / 4.0).abs() < 1e-12);
        assert_eq!(cfg.tau_final, 6.0);
        assert!((cfg.estimated_max_g - 40.0).abs() < 1e-9);
    }
}
