use crate::error::{CoreError, Result};

/// Origin-centered box in Z^d, d = 1 or 2, with odd side length.
///
/// Sites are enumerated in a fixed row-major order (x1 outer, x2 inner),
/// so a site's index is stable across runs and across boxes of equal shape.
/// Distances are measured in the 1-norm throughout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBox {
    d: usize,
    side: usize,
    radius: i64,
}

impl LatticeBox {
    pub fn new(d: usize, side: usize) -> Result<Self> {
        if d == 0 || d > 2 {
            return Err(CoreError::InvalidDimension(d));
        }
        if side == 0 || side % 2 == 0 {
            return Err(CoreError::InvalidSide(side));
        }
        Ok(Self {
            d,
            side,
            radius: (side as i64 - 1) / 2,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Half-width: coordinates run over -radius ..= radius.
    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn n_sites(&self) -> usize {
        self.side.pow(self.d as u32)
    }

    /// Largest 1-norm distance between two sites of the box.
    pub fn diameter(&self) -> i64 {
        self.d as i64 * (self.side as i64 - 1)
    }

    pub fn contains(&self, p: [i64; 2]) -> bool {
        let in_range = |c: i64| c.abs() <= self.radius;
        match self.d {
            1 => in_range(p[0]) && p[1] == 0,
            _ => in_range(p[0]) && in_range(p[1]),
        }
    }

    /// Coordinates of the site with the given enumeration index.
    /// One-dimensional boxes keep x2 = 0.
    pub fn site(&self, idx: usize) -> [i64; 2] {
        debug_assert!(idx < self.n_sites());
        match self.d {
            1 => [idx as i64 - self.radius, 0],
            _ => {
                let l = self.side as i64;
                [
                    (idx as i64) / l - self.radius,
                    (idx as i64) % l - self.radius,
                ]
            }
        }
    }

    pub fn index_of(&self, p: [i64; 2]) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        Some(match self.d {
            1 => (p[0] + self.radius) as usize,
            _ => ((p[0] + self.radius) * self.side as i64 + (p[1] + self.radius)) as usize,
        })
    }

    pub fn index_of_checked(&self, p: [i64; 2]) -> Result<usize> {
        self.index_of(p).ok_or(CoreError::SiteOutOfBox(p))
    }

    /// Index of the origin site.
    pub fn center(&self) -> usize {
        self.index_of([0, 0]).expect("origin is always in the box")
    }

    pub fn sites(&self) -> impl Iterator<Item = [i64; 2]> + '_ {
        (0..self.n_sites()).map(move |i| self.site(i))
    }

    /// 1-norm distance between the sites at the two indices.
    pub fn distance(&self, i: usize, j: usize) -> i64 {
        let a = self.site(i);
        let b = self.site(j);
        norm1(sub(a, b))
    }
}

pub fn sub(a: [i64; 2], b: [i64; 2]) -> [i64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: [i64; 2], b: [i64; 2]) -> [i64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn norm1(p: [i64; 2]) -> i64 {
    p[0].abs() + p[1].abs()
}
