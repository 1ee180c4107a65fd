use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Axis-aligned rectangle anchored at its south-west corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    #[serde(rename = "x_px")]
    pub x: f64,
    #[serde(rename = "y_px")]
    pub y: f64,
    #[serde(rename = "width_px")]
    pub width: f64,
    #[serde(rename = "height_px")]
    pub height: f64,
}

impl Rect {
    pub const fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        Self { x, y, width, height }
    }

    pub fn max_x(&self) -> f64 {
        self.x + self.width
    }

    pub fn max_y(&self) -> f64 {
        self.y + self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn contains_closed(&self, p: Point) -> bool {
        p.x >= self.x && p.x <= self.max_x() && p.y >= self.y && p.y <= self.max_y()
    }

    pub fn contains_open(&self, p: Point) -> bool {
        p.x > self.x && p.x < self.max_x() && p.y > self.y && p.y < self.max_y()
    }

    /// Euclidean distance from `p` to the rectangle (zero inside).
    pub fn distance_to(&self, p: Point) -> f64 {
        let dx = (self.x - p.x).max(0.0).max(p.x - self.max_x());
        let dy = (self.y - p.y).max(0.0).max(p.y - self.max_y());
        dx.hypot(dy)
    }

    /// True when the rectangles overlap after growing `self` by `margin` on every side.
    pub fn intersects_with_margin(&self, other: &Rect, margin: f64) -> bool {
        self.x - margin < other.max_x()
            && other.x < self.max_x() + margin
            && self.y - margin < other.max_y()
            && other.y < self.max_y() + margin
    }

    /// Grows the rectangle by `margin` on every side.
    pub fn inflated(&self, margin: f64) -> Rect {
        Rect::new(self.x - margin, self.y - margin, self.width + 2.0 * margin, self.height + 2.0 * margin)
    }

    pub fn center(&self) -> Point {
        Point::new(self.x + self.width / 2.0, self.y + self.height / 2.0)
    }
}

/// Distance along the unit ray `(origin, dir)` to the first entry into `rect`.
///
/// Returns `None` when the ray misses or the rectangle lies behind the origin.
pub fn ray_rect(origin: Point, dir: (f64, f64), rect: &Rect) -> Option<f64> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for (o, d, lo, hi) in [
        (origin.x, dir.0, rect.x, rect.max_x()),
        (origin.y, dir.1, rect.y, rect.max_y()),
    ] {
        if d.abs() < 1e-12 {
            if o < lo || o > hi {
                return None;
            }
        } else {
            let t1 = (lo - o) / d;
            let t2 = (hi - o) / d;
            let (a, b) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            t_near = t_near.max(a);
            t_far = t_far.min(b);
        }
    }
    if t_near > t_far || t_far < 0.0 {
        return None;
    }
    Some(t_near.max(0.0))
}

/// Distance along the unit ray to leave `rect` from an interior origin.
pub fn ray_exit_rect(origin: Point, dir: (f64, f64), rect: &Rect) -> f64 {
    let mut t = f64::INFINITY;
    for (o, d, lo, hi) in [
        (origin.x, dir.0, rect.x, rect.max_x()),
        (origin.y, dir.1, rect.y, rect.max_y()),
    ] {
        if d > 1e-12 {
            t = t.min((hi - o) / d);
        } else if d < -1e-12 {
            t = t.min((lo - o) / d);
        }
    }
    t.max(0.0)
}

/// Distance along the unit ray to the first hit on a disc.
pub fn ray_circle(origin: Point, dir: (f64, f64), center: Point, radius: f64) -> Option<f64> {
    let fx = origin.x - center.x;
    let fy = origin.y - center.y;
    let b = fx * dir.0 + fy * dir.1;
    let c = fx * fx + fy * fy - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    (t >= 0.0).then_some(t)
}
