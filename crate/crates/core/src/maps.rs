//! Maps between truncations and the finite predicates on them:
//! bornologous control, properness and closeness.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CoarseError, Result};
use crate::metric::{Ball, FiniteMetricSpace};
use crate::scalar::Scalar;

/// A total map from a source truncation into a target truncation, stored as
/// target indices.
#[derive(Debug, Clone)]
pub struct PointMap<T> {
    source: Arc<FiniteMetricSpace<T>>,
    target: Arc<FiniteMetricSpace<T>>,
    values: Vec<usize>,
}

impl<T: Scalar> PointMap<T> {
    pub fn new(
        source: Arc<FiniteMetricSpace<T>>,
        target: Arc<FiniteMetricSpace<T>>,
        values: Vec<usize>,
    ) -> Result<Self> {
        if values.len() != source.len() {
            return Err(CoarseError::Mismatch(format!(
                "map has {} values for {} source points",
                values.len(),
                source.len()
            )));
        }
        if let Some(&v) = values.iter().find(|&&v| v >= target.len()) {
            return Err(CoarseError::Mismatch(format!("value #{v} outside target")));
        }
        Ok(Self { source, target, values })
    }

    /// Builds a map from a function on indices.
    pub fn from_fn(
        source: Arc<FiniteMetricSpace<T>>,
        target: Arc<FiniteMetricSpace<T>>,
        f: impl Fn(usize) -> Option<usize>,
    ) -> Result<Self> {
        let values = (0..source.len())
            .map(|i| {
                f(i).ok_or_else(|| {
                    CoarseError::Mismatch(format!("image of `{}` outside target", source.label(i)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(source, target, values)
    }

    /// Identity of a space onto itself.
    pub fn identity(space: Arc<FiniteMetricSpace<T>>) -> Self {
        let values = (0..space.len()).collect();
        Self {
            source: space.clone(),
            target: space,
            values,
        }
    }

    pub fn source(&self) -> &Arc<FiniteMetricSpace<T>> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FiniteMetricSpace<T>> {
        &self.target
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn apply(&self, i: usize) -> usize {
        self.values[i]
    }

    /// Distance in the target between the images of `i` and `j`.
    pub fn image_dist(&self, i: usize, j: usize) -> T {
        self.target.dist(self.values[i], self.values[j])
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &PointMap<T>) -> Result<PointMap<T>> {
        if other.source.len() != self.target.len() {
            return Err(CoarseError::Mismatch("maps are not composable".into()));
        }
        Ok(PointMap {
            source: self.source.clone(),
            target: other.target.clone(),
            values: self.values.iter().map(|&v| other.values[v]).collect(),
        })
    }
}

/// Tabulated monotone control function `R ↦ ρ(R)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlFunction<T> {
    pub radii: Vec<T>,
    pub bounds: Vec<T>,
}

impl<T: Scalar> ControlFunction<T> {
    pub fn bound_at(&self, radius: T) -> Option<T> {
        self.radii.iter().position(|&r| r == radius).map(|i| self.bounds[i])
    }

    pub fn is_monotone(&self) -> bool {
        self.bounds.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.radii.iter().copied().zip(self.bounds.iter().copied())
    }
}

/// Largest image distance over source pairs with `d <= R`.
pub fn control_at<T: Scalar>(f: &PointMap<T>, radius: T) -> T {
    let src = &f.source;
    let nb = src.neighborhood(radius, Ball::Closed);
    let mut best = T::zero();
    let mut buf = Vec::new();
    for i in 0..src.len() {
        buf.clear();
        nb.collect(i, &mut buf);
        for &j in &buf {
            best = best.max_of(f.image_dist(i, j));
        }
    }
    best
}

/// Estimates the control function of `f` at the given radii by an
/// exhaustive pair scan over the source truncation.
pub fn estimate_control<T: Scalar>(f: &PointMap<T>, radii: &[T]) -> Result<ControlFunction<T>> {
    if radii.is_empty() {
        return Err(CoarseError::Empty("radii"));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();
    let bounds = radii.iter().map(|&r| control_at(f, r)).collect();
    Ok(ControlFunction { radii, bounds })
}

#[derive(Debug, Clone, Serialize)]
pub struct PropernessReport<T> {
    /// Radius of the target ball `B(y0, radius)`.
    pub radius: T,
    pub preimage_size: usize,
    /// Diameter of the preimage in the source.
    pub preimage_diameter: T,
    /// Largest basepoint distance of a preimage point; the preimage lies in
    /// the closed source ball of this radius.
    pub preimage_extent: T,
    /// Largest basepoint distance in the source truncation.
    pub source_extent: T,
    /// The preimage reaches the outer shell of the source, so the map looks
    /// non-proper at this depth.
    pub properness_failure: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProperCloseReport<T> {
    pub properness: PropernessReport<T>,
    /// `sup_x d(f(x), g(x))` when a second map is supplied.
    pub closeness: Option<T>,
}

/// Preimage of the open target ball around the target basepoint, and the
/// closeness constant between `f` and `g`.
pub fn check_proper_close<T: Scalar>(
    f: &PointMap<T>,
    g: Option<&PointMap<T>>,
    radius: T,
    margin: T,
) -> Result<ProperCloseReport<T>> {
    if let Some(g) = g {
        if g.source.len() != f.source.len() || g.target.len() != f.target.len() {
            return Err(CoarseError::Mismatch("f and g must share source and target".into()));
        }
    }
    let tgt = &f.target;
    let pre: Vec<usize> = (0..f.source.len())
        .filter(|&i| tgt.norm(f.values[i]) < radius)
        .collect();
    let src = &f.source;
    let mut diameter = T::zero();
    for (k, &a) in pre.iter().enumerate() {
        for &b in &pre[k + 1..] {
            diameter = diameter.max_of(src.dist(a, b));
        }
    }
    let norms = src.norms();
    let extent = pre.iter().map(|&i| norms[i]).fold(T::zero(), T::max_of);
    let source_extent = norms.iter().copied().fold(T::zero(), T::max_of);
    let closeness = g.map(|g| {
        (0..src.len())
            .map(|i| tgt.dist(f.values[i], g.values[i]))
            .fold(T::zero(), T::max_of)
    });
    Ok(ProperCloseReport {
        properness: PropernessReport {
            radius,
            preimage_size: pre.len(),
            preimage_diameter: diameter,
            preimage_extent: extent,
            source_extent,
            properness_failure: !pre.is_empty() && extent + margin > source_extent,
        },
        closeness,
    })
}

/// A bounded complex-valued function on a truncation.
#[derive(Debug, Clone)]
pub struct ComplexMap<T> {
    source: Arc<FiniteMetricSpace<T>>,
    values: Vec<Complex64>,
}

impl<T: Scalar> ComplexMap<T> {
    pub fn new(source: Arc<FiniteMetricSpace<T>>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != source.len() {
            return Err(CoarseError::Mismatch("one value per source point required".into()));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CoarseError::InvalidParameter("function must be bounded".into()));
        }
        Ok(Self { source, values })
    }

    pub fn from_fn(source: Arc<FiniteMetricSpace<T>>, f: impl Fn(usize) -> Complex64) -> Result<Self> {
        let values = (0..source.len()).map(f).collect();
        Self::new(source, values)
    }

    pub fn source(&self) -> &Arc<FiniteMetricSpace<T>> {
        &self.source
    }

    pub fn value(&self, i: usize) -> Complex64 {
        self.values[i]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{builtin_space, SpaceName};

    fn z(level: usize) -> Arc<FiniteMetricSpace<i64>> {
        Arc::new(builtin_space::<i64>(&SpaceName::Integers, level).unwrap().level(level).unwrap())
    }

    fn int_of(s: &FiniteMetricSpace<i64>, i: usize) -> i64 {
        s.coords(i).unwrap()[0]
    }

    #[test]
    fn identity_control_is_isometric() {
        let id = PointMap::identity(z(50));
        let c = estimate_control(&id, &[1, 2, 5]).unwrap();
        assert_eq!(c.bounds, vec![1, 2, 5]);
    }

    #[test]
    fn squares_inclusion_is_isometric() {
        let sq = Arc::new(builtin_space::<i64>(&SpaceName::Squares, 100).unwrap().level(100).unwrap());
        let zz = z(100);
        let inc = PointMap::from_fn(sq.clone(), zz.clone(), |i| zz.lattice_index(&[int_of(&sq, i)])).unwrap();
        assert_eq!(estimate_control(&inc, &[7]).unwrap().bounds, vec![7]);
    }

    #[test]
    fn floor_norm_map_control() {
        // Oracle: explicit double loop over all pairs.
        let zz = z(50);
        let g = PointMap::from_fn(zz.clone(), zz.clone(), |i| zz.lattice_index(&[int_of(&zz, i).abs()])).unwrap();
        let mut oracle = 0;
        for a in -50i64..=50 {
            for b in -50i64..=50 {
                if (a - b).abs() <= 3 {
                    oracle = oracle.max((a.abs() - b.abs()).abs());
                }
            }
        }
        let rho = estimate_control(&g, &[3]).unwrap().bounds[0];
        assert_eq!(rho, oracle);
        assert!(rho <= 4);
    }

    #[test]
    fn empty_radii_rejected() {
        assert!(matches!(estimate_control(&PointMap::identity(z(3)), &[]), Err(CoarseError::Empty(_))));
    }

    #[test]
    fn identity_is_proper() {
        let zz = z(20);
        let r = check_proper_close(&PointMap::identity(zz), None, 5, 1).unwrap();
        assert_eq!(r.properness.preimage_extent, 4);
        assert!(!r.properness.properness_failure);
    }

    #[test]
    fn constant_map_is_flagged() {
        let zz = z(20);
        let c = PointMap::from_fn(zz.clone(), zz.clone(), |_| Some(0)).unwrap();
        let r = check_proper_close(&c, None, 1, 1).unwrap();
        assert_eq!(r.properness.preimage_size, zz.len());
        assert_eq!(r.properness.preimage_extent, 20);
        assert!(r.properness.properness_failure);
    }

    #[test]
    fn shift_closeness_constant() {
        let src = z(20);
        let tgt = z(22);
        let f = PointMap::from_fn(src.clone(), tgt.clone(), |i| tgt.lattice_index(&[int_of(&src, i)])).unwrap();
        let g = PointMap::from_fn(src.clone(), tgt.clone(), |i| tgt.lattice_index(&[int_of(&src, i) + 2])).unwrap();
        let r = check_proper_close(&f, Some(&g), 5, 1).unwrap();
        assert_eq!(r.closeness, Some(2));
    }

    #[test]
    fn mismatched_maps_rejected() {
        let f = PointMap::identity(z(5));
        let g = PointMap::identity(z(6));
        assert!(matches!(check_proper_close(&f, Some(&g), 1, 1), Err(CoarseError::Mismatch(_))));
    }
}
