//! Open sets as composable membership oracles plus bounding boxes, and
//! space-time cylinders with parabolic boundary classification.
//!
//! Domains are oracles, not meshes: the solvers only ever ask "is this point
//! inside" and locate boundary crossings by bisection along path segments.
//! That supports punctured balls and thorn-like complements that meshes
//! handle poorly.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{KolmoError, Result};
use crate::operator::GroupPoint;

/// Axis-aligned box, possibly unbounded (infinite corners).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn everything(dim: usize) -> Self {
        Aabb {
            lo: vec![f64::NEG_INFINITY; dim],
            hi: vec![f64::INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.iter().chain(self.hi.iter()).all(|v| v.is_finite())
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| a.min(*b))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| a.max(*b))
                .collect(),
        }
    }

    pub fn intersect(&self, other: &Aabb) -> Aabb {
        Aabb {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| a.max(*b))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| a.min(*b))
                .collect(),
        }
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| v >= l && v <= h)
    }
}

/// The JSON-facing constructive set language. Every node is an oracle.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Shape {
    /// All of R^dim; complement of `empty`.
    Full { dim: usize },
    /// The empty set in R^dim.
    Empty { dim: usize },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        min: Vec<f64>,
        max: Vec<f64>,
    },
    /// Open halfspace `<normal, x> < offset`.
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
    /// Solid cone from `apex` along unit `axis`, height `height`, radius
    /// growing as `slope * s` at distance s from the apex. Optional per-axis
    /// `weights` rescale coordinates before the test, giving anisotropic
    /// (thorn-like) cones.
    Cone {
        apex: Vec<f64>,
        axis: Vec<f64>,
        slope: f64,
        height: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Complement {
        children: Vec<Shape>,
    },
    Union {
        children: Vec<Shape>,
    },
    Intersect {
        children: Vec<Shape>,
    },
    /// `children[0]` minus the closed ball of `radius` around `point`;
    /// radius 0 removes exactly the point.
    Puncture {
        children: Vec<Shape>,
        point: Vec<f64>,
        radius: f64,
    },
}

impl Shape {
    pub fn ball(center: &[f64], radius: f64) -> Shape {
        Shape::Ball {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn cube(lo: f64, hi: f64, dim: usize) -> Shape {
        Shape::Box {
            min: vec![lo; dim],
            max: vec![hi; dim],
        }
    }

    fn dim(&self) -> Result<usize> {
        let d = match self {
            Shape::Full { dim } | Shape::Empty { dim } => *dim,
            Shape::Ball { center, .. } => center.len(),
            Shape::Box { min, .. } => min.len(),
            Shape::Halfspace { normal, .. } => normal.len(),
            Shape::Cone { apex, .. } => apex.len(),
            Shape::Complement { children }
            | Shape::Union { children }
            | Shape::Intersect { children } => {
                let dims = children
                    .iter()
                    .map(|c| c.dim())
                    .collect::<Result<Vec<_>>>()?;
                if dims.is_empty() || dims.windows(2).any(|w| w[0] != w[1]) {
                    return Err(KolmoError::structural("combinator children dim mismatch"));
                }
                dims[0]
            }
            Shape::Puncture { children, .. } => {
                if children.len() != 1 {
                    return Err(KolmoError::structural("puncture needs exactly one child"));
                }
                children[0].dim()?
            }
        };
        if d == 0 {
            return Err(KolmoError::structural("zero-dimensional shape"));
        }
        Ok(d)
    }

    fn check(&self) -> Result<()> {
        match self {
            Shape::Ball { radius, .. } if *radius <= 0.0 => {
                Err(KolmoError::structural("ball radius must be positive"))
            }
            Shape::Box { min, max } => {
                if min.len() != max.len() || min.iter().zip(max).any(|(l, h)| l >= h) {
                    Err(KolmoError::structural("box needs min < max per axis"))
                } else {
                    Ok(())
                }
            }
            Shape::Halfspace { normal, .. } => {
                if normal.iter().map(|v| v * v).sum::<f64>() == 0.0 {
                    Err(KolmoError::structural("halfspace normal must be nonzero"))
                } else {
                    Ok(())
                }
            }
            Shape::Cone {
                apex,
                axis,
                slope,
                height,
                weights,
            } => {
                if axis.len() != apex.len() {
                    return Err(KolmoError::structural("cone axis/apex dim mismatch"));
                }
                if axis.iter().map(|v| v * v).sum::<f64>() == 0.0 || *slope <= 0.0 || *height <= 0.0
                {
                    return Err(KolmoError::structural("cone needs nonzero axis, slope, height"));
                }
                if let Some(w) = weights {
                    if w.len() != apex.len() || w.iter().any(|v| *v <= 0.0) {
                        return Err(KolmoError::structural("cone weights must be positive"));
                    }
                }
                Ok(())
            }
            Shape::Complement { children } if children.len() != 1 => {
                Err(KolmoError::structural("complement needs exactly one child"))
            }
            Shape::Union { children } | Shape::Intersect { children } if children.is_empty() => {
                Err(KolmoError::structural("combinator needs children"))
            }
            Shape::Puncture { radius, .. } if *radius < 0.0 => {
                Err(KolmoError::structural("puncture radius must be >= 0"))
            }
            _ => Ok(()),
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::Full { .. } => true,
            Shape::Empty { .. } => false,
            Shape::Ball { center, radius } => {
                x.iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    < radius * radius
            }
            Shape::Box { min, max } => x
                .iter()
                .zip(min.iter().zip(max))
                .all(|(v, (l, h))| v > l && v < h),
            Shape::Halfspace { normal, offset } => {
                x.iter().zip(normal).map(|(a, b)| a * b).sum::<f64>() < *offset
            }
            Shape::Cone {
                apex,
                axis,
                slope,
                height,
                weights,
            } => {
                let w: Vec<f64> = match weights {
                    Some(ws) => x
                        .iter()
                        .zip(apex)
                        .zip(ws)
                        .map(|((v, a), s)| (v - a) / s)
                        .collect(),
                    None => x.iter().zip(apex).map(|(v, a)| v - a).collect(),
                };
                let axis_norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
                let s: f64 =
                    w.iter().zip(axis).map(|(a, b)| a * b).sum::<f64>() / axis_norm;
                if s <= 0.0 || s >= *height {
                    return false;
                }
                let perp_sq = w.iter().map(|v| v * v).sum::<f64>() - s * s;
                perp_sq < (slope * s) * (slope * s)
            }
            Shape::Complement { children } => !children[0].contains(x),
            Shape::Union { children } => children.iter().any(|c| c.contains(x)),
            Shape::Intersect { children } => children.iter().all(|c| c.contains(x)),
            Shape::Puncture {
                children,
                point,
                radius,
            } => {
                if !children[0].contains(x) {
                    return false;
                }
                let d2: f64 = x.iter().zip(point).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 > radius * radius
            }
        }
    }

    fn bbox(&self, dim: usize) -> Aabb {
        match self {
            Shape::Full { .. } => Aabb::everything(dim),
            Shape::Empty { .. } => Aabb {
                lo: vec![0.0; dim],
                hi: vec![0.0; dim],
            },
            Shape::Ball { center, radius } => Aabb {
                lo: center.iter().map(|c| c - radius).collect(),
                hi: center.iter().map(|c| c + radius).collect(),
            },
            Shape::Box { min, max } => Aabb {
                lo: min.clone(),
                hi: max.clone(),
            },
            // Complements and halfspaces are unbounded; the box only has to
            // contain the inside, so everything is the honest answer.
            Shape::Halfspace { .. } | Shape::Complement { .. } => Aabb::everything(dim),
            Shape::Cone {
                apex,
                axis,
                slope,
                height,
                weights,
            } => {
                let axis_norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
                let reach = height * (1.0 + slope);
                let wmax = weights
                    .as_ref()
                    .map(|ws| ws.iter().cloned().fold(0.0f64, f64::max))
                    .unwrap_or(1.0);
                Aabb {
                    lo: apex
                        .iter()
                        .zip(axis)
                        .map(|(a, ax)| a + (ax / axis_norm * height).min(0.0) - reach * wmax)
                        .collect(),
                    hi: apex
                        .iter()
                        .zip(axis)
                        .map(|(a, ax)| a + (ax / axis_norm * height).max(0.0) + reach * wmax)
                        .collect(),
                }
            }
            Shape::Union { children } => children
                .iter()
                .map(|c| c.bbox(dim))
                .reduce(|a, b| a.union(&b))
                .unwrap(),
            Shape::Intersect { children } => children
                .iter()
                .map(|c| c.bbox(dim))
                .reduce(|a, b| a.intersect(&b))
                .unwrap(),
            Shape::Puncture { children, .. } => children[0].bbox(dim),
        }
    }

    fn check_tree(&self) -> Result<()> {
        self.check()?;
        match self {
            Shape::Complement { children }
            | Shape::Union { children }
            | Shape::Intersect { children }
            | Shape::Puncture { children, .. } => {
                for c in children {
                    c.check_tree()?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// An open set with its oracle, bounding box and a descriptive tag.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Domain {
    shape: Shape,
    #[serde(default)]
    tag: String,
    #[serde(skip)]
    bbox_cache: std::sync::OnceLock<Aabb>,
}

impl Domain {
    pub fn new(shape: Shape, tag: impl Into<String>) -> Result<Self> {
        shape.check_tree()?;
        let dim = shape.dim()?;
        let bbox = shape.bbox(dim);
        if bbox.is_empty() {
            return Err(KolmoError::structural("empty bounding box"));
        }
        let cell = std::sync::OnceLock::new();
        let _ = cell.set(bbox);
        Ok(Domain {
            shape,
            tag: tag.into(),
            bbox_cache: cell,
        })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let shape: Shape =
            serde_json::from_str(json).map_err(|e| KolmoError::Config(e.to_string()))?;
        Domain::new(shape, "json")
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn dim(&self) -> usize {
        self.shape.dim().expect("validated at construction")
    }

    pub fn bounding_box(&self) -> &Aabb {
        self.bbox_cache.get_or_init(|| {
            let dim = self.shape.dim().expect("validated at construction");
            self.shape.bbox(dim)
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.shape.contains(x)
    }

    pub fn contains_vec(&self, x: &DVector<f64>) -> bool {
        self.shape.contains(x.as_slice())
    }

    /// Default boundary-detection tolerance: 1e-6 of the box diameter
    /// (or 1e-6 when unbounded).
    pub fn default_eps(&self) -> f64 {
        let bb = self.bounding_box();
        if bb.is_bounded() {
            1e-6 * bb.diameter().max(1.0)
        } else {
            1e-6
        }
    }

    /// Oracle disagreement within eps along coordinate probes: the distance
    /// proxy used instead of a signed distance.
    pub fn near_boundary(&self, x: &[f64], eps: f64) -> bool {
        let base = self.contains(x);
        let mut probe = x.to_vec();
        for i in 0..x.len() {
            for d in [eps, -eps] {
                probe[i] = x[i] + d;
                if self.contains(&probe) != base {
                    return true;
                }
            }
            probe[i] = x[i];
        }
        false
    }
}

/// Locate a boundary crossing on the segment [a, b], where `a` is inside and
/// `b` outside. Returns the crossing point and its parameter in (0, 1].
/// 60 halvings put the parametric tolerance below 1e-17.
pub fn bisect_crossing(domain: &Domain, a: &DVector<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    debug_assert!(domain.contains_vec(a) && !domain.contains_vec(b));
    let mut lo = 0.0f64; // inside
    let mut hi = 1.0f64; // outside
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let p = a + (b - a) * mid;
        if domain.contains_vec(&p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Report the outside end of the bracket: evaluating data there is
    // consistent with "first point past the boundary".
    (a + (b - a) * hi, hi)
}

/// Space-time cylinder: base x (t0, t1).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cylinder {
    pub base: Domain,
    pub t0: f64,
    pub t1: f64,
}

impl Cylinder {
    pub fn new(base: Domain, t0: f64, t1: f64) -> Result<Self> {
        if !(t0 < t1) {
            return Err(KolmoError::structural(format!(
                "cylinder needs t0 < t1, got [{t0}, {t1}]"
            )));
        }
        Ok(Cylinder { base, t0, t1 })
    }

    pub fn height(&self) -> f64 {
        self.t1 - self.t0
    }
}

/// Where a space-time point sits relative to a cylinder. The parabolic
/// boundary is `Lateral` together with `Bottom`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryClass {
    Lateral,
    Bottom,
    Top,
    Interior,
    Exterior,
}

/// A classified query point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryQuery {
    pub x: Vec<f64>,
    pub t: f64,
    pub class: BoundaryClass,
}

/// Classify z against the cylinder with detection tolerance eps.
///
/// Exhaustive and mutually exclusive; lateral wins at edges and corners so
/// the parabolic boundary is never under-reported.
pub fn classify_boundary(cyl: &Cylinder, z: &GroupPoint, eps: f64) -> BoundaryQuery {
    let x = z.x.as_slice();
    let t = z.t;
    let near_lat = cyl.base.near_boundary(x, eps);
    let inside = cyl.base.contains(x);

    let class = if near_lat && t > cyl.t0 - eps && t <= cyl.t1 + eps {
        BoundaryClass::Lateral
    } else if inside && (t - cyl.t0).abs() <= eps {
        BoundaryClass::Bottom
    } else if inside && (t - cyl.t1).abs() <= eps {
        BoundaryClass::Top
    } else if inside && t > cyl.t0 && t < cyl.t1 {
        BoundaryClass::Interior
    } else {
        BoundaryClass::Exterior
    };

    BoundaryQuery {
        x: x.to_vec(),
        t,
        class,
    }
}
