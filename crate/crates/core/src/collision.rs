//! Bucketed obstacle lookup for the car disc.

use crate::types::{Instance, Point};

#[derive(Debug, Clone)]
pub struct ObstacleIndex {
    width: f64,
    height: f64,
    footprint: f64,
    bucket: f64,
    nx: usize,
    ny: usize,
    /// Obstacle discs (center, inflated radius squared) per bucket.
    buckets: Vec<Vec<(Point, f64)>>,
}

impl ObstacleIndex {
    pub fn new(instance: &Instance) -> Self {
        let footprint = instance.kinematics.footprint_radius;
        let bucket = 2.0;
        let nx = ((instance.width / bucket).ceil() as usize).max(1);
        let ny = ((instance.height / bucket).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for o in &instance.obstacles {
            let reach = o.radius + footprint;
            let clamp_x = |v: f64| ((v / bucket).floor().max(0.0) as usize).min(nx - 1);
            let clamp_y = |v: f64| ((v / bucket).floor().max(0.0) as usize).min(ny - 1);
            for bx in clamp_x(o.center.x - reach)..=clamp_x(o.center.x + reach) {
                for by in clamp_y(o.center.y - reach)..=clamp_y(o.center.y + reach) {
                    buckets[by * nx + bx].push((o.center, reach * reach));
                }
            }
        }
        ObstacleIndex {
            width: instance.width,
            height: instance.height,
            footprint,
            bucket,
            nx,
            ny,
            buckets,
        }
    }

    pub fn in_bounds(&self, p: &Point) -> bool {
        let r = self.footprint;
        p.x >= r && p.y >= r && p.x <= self.width - r && p.y <= self.height - r
    }

    /// The car disc centered at `p` lies inside the map and touches no obstacle.
    pub fn is_free(&self, p: &Point) -> bool {
        if !self.in_bounds(p) {
            return false;
        }
        let bx = ((p.x / self.bucket) as usize).min(self.nx - 1);
        let by = ((p.y / self.bucket) as usize).min(self.ny - 1);
        self.buckets[by * self.nx + bx]
            .iter()
            .all(|(c, reach_sq)| c.distance_sq(p) >= *reach_sq)
    }
}
