use serde::Serialize;

use super::grid::{embed, ValueGrid};
use super::EnvelopeError;
use crate::game_core::lp::{LinearProgram, LpOutcome, Relation, Sense};
use crate::game_core::{Belief, SIMPLEX_TOL};

/// Height below a chord at which a sample stops counting as a hull vertex.
const COLLINEAR_EPS: f64 = 1e-12;
/// Tolerance for locating a query point on the face.
const LOCATE_EPS: f64 = 1e-12;

/// A point of the graph of the envelope where it touches the samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HullVertex {
    /// Face coordinates.
    pub point: Vec<f64>,
    pub value: f64,
}

/// Maximal affine piece of the envelope: `Cav(q) = normal·q` on the convex hull of
/// `vertices`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Facet {
    pub vertices: Vec<HullVertex>,
    /// Affine representative over face coordinates.
    pub normal: Vec<f64>,
}

impl Facet {
    pub fn value_at(&self, face_point: &[f64]) -> f64 {
        self.normal.iter().zip(face_point).map(|(a, b)| a * b).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitAtom {
    pub weight: f64,
    pub belief: Belief,
}

/// Finite splitting of a barycenter into posteriors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitScheme {
    atoms: Vec<SplitAtom>,
    barycenter: Belief,
}

type LpQuery = (f64, Vec<(f64, usize)>, Vec<f64>);

impl SplitScheme {
    pub fn new(atoms: Vec<SplitAtom>, barycenter: Belief) -> Result<Self, EnvelopeError> {
        if atoms.is_empty() || atoms.iter().any(|a| a.weight.is_nan() || a.weight <= 0.0) {
            return Err(EnvelopeError::InvalidSplit("weights must be positive".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(EnvelopeError::InvalidSplit(format!("weights sum to {total}")));
        }
        for k in 0..barycenter.len() {
            let mean: f64 = atoms.iter().map(|a| a.weight * a.belief.weights()[k]).sum();
            if (mean - barycenter.weights()[k]).abs() > 1e-10 {
                return Err(EnvelopeError::InvalidSplit(format!("coordinate {k} averages to {mean}")));
            }
        }
        Ok(Self { atoms, barycenter })
    }

    pub fn trivial(belief: Belief) -> Self {
        Self { atoms: vec![SplitAtom { weight: 1.0, belief: belief.clone() }], barycenter: belief }
    }

    pub fn atoms(&self) -> &[SplitAtom] {
        &self.atoms
    }

    pub fn barycenter(&self) -> &Belief {
        &self.barycenter
    }

    pub fn is_trivial(&self) -> bool {
        self.atoms.len() == 1
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Point(f64),
    /// Upper hull of a one-dimensional face, ascending in the first face coordinate.
    Line(Vec<HullVertex>),
    /// Evaluated by one LP per query over all samples.
    Lp,
}

/// Smallest concave majorant of a sampled value function on a face.
#[derive(Clone, Debug)]
pub struct ConcaveEnvelope {
    grid: ValueGrid,
    shape: Shape,
}

/// Upper concave envelope of the grid samples.
pub fn concavify(grid: ValueGrid) -> ConcaveEnvelope {
    let shape = match grid.face().len() {
        1 => Shape::Point(grid.values()[0]),
        2 => Shape::Line(upper_hull(grid.points(), grid.values())),
        _ => Shape::Lp,
    };
    ConcaveEnvelope { grid, shape }
}

fn upper_hull(points: &[Vec<f64>], values: &[f64]) -> Vec<HullVertex> {
    let mut hull: Vec<HullVertex> = Vec::new();
    for (p, &v) in points.iter().zip(values) {
        let c = HullVertex { point: p.clone(), value: v };
        while hull.len() >= 2 {
            let a = &hull[hull.len() - 2];
            let b = &hull[hull.len() - 1];
            let t = (b.point[0] - a.point[0]) / (c.point[0] - a.point[0]);
            let chord = a.value + t * (c.value - a.value);
            if b.value - chord <= COLLINEAR_EPS {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(c);
    }
    hull
}

fn segment_normal(a: &HullVertex, b: &HullVertex) -> Vec<f64> {
    let slope = (b.value - a.value) / (b.point[0] - a.point[0]);
    let second = a.value - slope * a.point[0];
    vec![second + slope, second]
}

impl ConcaveEnvelope {
    pub fn grid(&self) -> &ValueGrid {
        &self.grid
    }

    pub fn face(&self) -> &[usize] {
        self.grid.face()
    }

    pub fn n_ambient(&self) -> usize {
        self.grid.n_ambient()
    }

    fn check_face_point(&self, p: &[f64]) -> Result<(), EnvelopeError> {
        if p.len() != self.face().len() {
            return Err(EnvelopeError::DimensionMismatch);
        }
        if p.iter().any(|w| *w < -LOCATE_EPS) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(EnvelopeError::OutsideFace);
        }
        Ok(())
    }

    /// Index of the hull segment `[i, i+1]` containing `x`.
    fn segment_of(hull: &[HullVertex], x: f64) -> usize {
        let idx = hull.partition_point(|v| v.point[0] <= x);
        idx.clamp(1, hull.len() - 1) - 1
    }

    /// Cav at a point given in face coordinates.
    pub fn eval_face(&self, p: &[f64]) -> Result<f64, EnvelopeError> {
        self.check_face_point(p)?;
        match &self.shape {
            Shape::Point(v) => Ok(*v),
            Shape::Line(hull) => {
                if hull.len() == 1 {
                    return Ok(hull[0].value);
                }
                let x = p[0].clamp(hull[0].point[0], hull[hull.len() - 1].point[0]);
                let i = Self::segment_of(hull, x);
                let (a, b) = (&hull[i], &hull[i + 1]);
                let t = (x - a.point[0]) / (b.point[0] - a.point[0]);
                Ok(a.value + t * (b.value - a.value))
            }
            Shape::Lp => Ok(self.lp_query(p)?.0),
        }
    }

    /// Cav at an ambient belief supported on the face.
    pub fn eval_cav(&self, belief: &Belief) -> Result<f64, EnvelopeError> {
        self.eval_face(&self.grid.restrict(belief.weights())?)
    }

    /// Samples where the envelope touches the value function.
    pub fn vertices(&self) -> Result<Vec<HullVertex>, EnvelopeError> {
        match &self.shape {
            Shape::Point(v) => Ok(vec![HullVertex { point: vec![1.0], value: *v }]),
            Shape::Line(hull) => Ok(hull.clone()),
            Shape::Lp => {
                let mut out = Vec::new();
                for (p, &v) in self.grid.points().iter().zip(self.grid.values()) {
                    if self.lp_query(p)?.0 - v <= 1e-9 {
                        out.push(HullVertex { point: p.clone(), value: v });
                    }
                }
                Ok(out)
            }
        }
    }

    /// Facets whose closure contains the face point, in ascending order.
    pub fn supporting_facets(&self, p: &[f64]) -> Result<Vec<Facet>, EnvelopeError> {
        self.check_face_point(p)?;
        match &self.shape {
            Shape::Point(v) => {
                Ok(vec![Facet { vertices: vec![HullVertex { point: vec![1.0], value: *v }], normal: vec![*v] }])
            }
            Shape::Line(hull) => {
                if hull.len() == 1 {
                    let v = &hull[0];
                    return Ok(vec![Facet { vertices: vec![v.clone()], normal: vec![v.value, v.value] }]);
                }
                let x = p[0];
                let mut out = Vec::new();
                for i in 0..hull.len() - 1 {
                    let (a, b) = (&hull[i], &hull[i + 1]);
                    if a.point[0] - LOCATE_EPS <= x && x <= b.point[0] + LOCATE_EPS {
                        out.push(Facet { vertices: vec![a.clone(), b.clone()], normal: segment_normal(a, b) });
                    }
                }
                Ok(out)
            }
            Shape::Lp => {
                let (_, atoms, normal) = self.lp_query(p)?;
                let vertices = atoms
                    .into_iter()
                    .map(|(_, i)| HullVertex { point: self.grid.points()[i].clone(), value: self.grid.values()[i] })
                    .collect();
                Ok(vec![Facet { vertices, normal }])
            }
        }
    }

    /// Split of `belief` over hull vertices attaining `Cav(belief)`; a single atom
    /// when the envelope touches the samples at `belief`.
    pub fn optimal_split(&self, belief: &Belief) -> Result<SplitScheme, EnvelopeError> {
        let p = self.grid.restrict(belief.weights())?;
        self.check_face_point(&p)?;
        let cav = self.eval_face(&p)?;
        let sample = self.grid.points().iter().position(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= LOCATE_EPS));
        if let Some(i) = sample {
            if cav - self.grid.values()[i] <= 1e-9 * (1.0 + cav.abs()) {
                return Ok(SplitScheme::trivial(belief.clone()));
            }
        }
        let atoms: Vec<(f64, Vec<f64>)> = match &self.shape {
            Shape::Point(_) => vec![(1.0, p.clone())],
            Shape::Line(hull) => {
                let i = Self::segment_of(hull, p[0]);
                let (a, b) = (&hull[i], &hull[i + 1]);
                let t = (p[0] - a.point[0]) / (b.point[0] - a.point[0]);
                [(1.0 - t, a.point.clone()), (t, b.point.clone())].into_iter().filter(|(w, _)| *w > 0.0).collect()
            }
            Shape::Lp => {
                let (_, atoms, _) = self.lp_query(&p)?;
                let total: f64 = atoms.iter().map(|(w, _)| w).sum();
                atoms.into_iter().map(|(w, i)| (w / total, self.grid.points()[i].clone())).collect()
            }
        };
        let n = self.n_ambient();
        let atoms = atoms
            .into_iter()
            .map(|(w, q)| Ok(SplitAtom { weight: w, belief: Belief::normalized(&embed(self.face(), n, &q))? }))
            .collect::<Result<Vec<_>, EnvelopeError>>()?;
        SplitScheme::new(atoms, belief.clone())
    }

    /// `(Cav(p), atoms as (weight, sample index), supporting normal)` by LP over all samples.
    fn lp_query(&self, p: &[f64]) -> Result<LpQuery, EnvelopeError> {
        let points = self.grid.points();
        let values = self.grid.values();
        let m = p.len();
        let mut lp = LinearProgram::new(points.len(), Sense::Maximize, values.to_vec());
        for k in 0..m {
            lp.add(points.iter().map(|q| q[k]).collect(), Relation::Eq, p[k]);
        }
        match lp.solve()? {
            LpOutcome::Optimal(s) => {
                let atoms = s.x.iter().enumerate().filter(|(_, w)| **w > 1e-12).map(|(i, w)| (*w, i)).collect();
                Ok((s.objective, atoms, s.duals))
            }
            _ => Err(EnvelopeError::OutsideFace),
        }
    }

    /// Rows `(face coordinates, value, cav_value)` for every sample.
    pub fn export_rows(&self) -> Result<Vec<(Vec<f64>, f64, f64)>, EnvelopeError> {
        self.grid
            .points()
            .iter()
            .zip(self.grid.values())
            .map(|(p, &v)| Ok((p.clone(), v, self.eval_face(p)?)))
            .collect()
    }

    /// Chart coordinates (first `|face|−1` face weights) of a face point.
    pub fn chart_coords(&self, p: &[f64]) -> Vec<f64> {
        p[..p.len() - 1].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::super::grid::{sample_value, LINE_RESOLUTION};
    use super::*;
    use crate::game_core::StageGameFamily;

    fn family(m: &[Vec<Vec<f64>>]) -> StageGameFamily {
        StageGameFamily::from_matrices(m).unwrap()
    }

    fn example1_b() -> StageGameFamily {
        family(&[vec![vec![4.0, 0.0, 2.0], vec![4.0, 0.0, -2.0]], vec![vec![0.0, 4.0, -2.0], vec![0.0, 4.0, 2.0]]])
    }

    #[test]
    fn example1_b_envelope() {
        let env = concavify(sample_value(&example1_b(), &[0, 1], LINE_RESOLUTION).unwrap());
        assert!((env.eval_face(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-12);
        assert!((env.eval_face(&[0.1, 0.9]).unwrap() - 0.4).abs() < 1e-12);
        let split = env.optimal_split(&Belief::binary(0.5).unwrap()).unwrap();
        let xs: Vec<f64> = split.atoms().iter().map(|a| a.belief.weights()[0]).collect();
        assert_eq!(xs, vec![0.25, 0.75]);
        assert!(split.atoms().iter().all(|a| (a.weight - 0.5).abs() < 1e-12));
    }

    #[test]
    fn strictly_concave_envelope_is_trivial() {
        let a = family(&[vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![vec![0.0, 0.0], vec![0.0, 1.0]]]);
        let env = concavify(sample_value(&a, &[0, 1], LINE_RESOLUTION).unwrap());
        assert_eq!(env.vertices().unwrap().len(), 1001);
        assert!(env.optimal_split(&Belief::binary(0.5).unwrap()).unwrap().is_trivial());
    }

    #[test]
    fn flat_envelopes() {
        let attainable = family(&[vec![vec![0.0, 0.0], vec![0.0, -1.0]], vec![vec![-1.0, 0.0], vec![0.0, 0.0]]]);
        let env = concavify(sample_value(&attainable, &[0, 1], LINE_RESOLUTION).unwrap());
        assert_eq!(env.vertices().unwrap().len(), 2);
        for q in [0.0, 0.3, 0.5, 1.0] {
            assert!(env.eval_face(&[q, 1.0 - q]).unwrap().abs() < 1e-12);
        }
        let non_attainable = family(&[vec![vec![1.0, 1.0], vec![-1.0, -1.0]], vec![vec![-1.0, -1.0], vec![1.0, 1.0]]]);
        let env = concavify(sample_value(&non_attainable, &[0, 1], LINE_RESOLUTION).unwrap());
        for q in [0.0, 0.2, 0.5, 0.9] {
            assert!((env.eval_face(&[q, 1.0 - q]).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vertex_split_is_single_atom() {
        let env = concavify(sample_value(&example1_b(), &[0, 1], LINE_RESOLUTION).unwrap());
        assert!(env.optimal_split(&Belief::binary(1.0).unwrap()).unwrap().is_trivial());
        assert!(env.optimal_split(&Belief::binary(0.25).unwrap()).unwrap().is_trivial());
    }

    #[test]
    fn affine_values_reproduce_themselves() {
        let grid = ValueGrid::sample(&[0, 1, 2], 3, 0.1, &[], |w| Ok(2.0 * w[0] - w[1] + 0.5 * w[2])).unwrap();
        let env = concavify(grid);
        for p in [[0.2, 0.3, 0.5], [1.0, 0.0, 0.0], [0.05, 0.05, 0.9]] {
            let expected = 2.0 * p[0] - p[1] + 0.5 * p[2];
            assert!((env.eval_face(&p).unwrap() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn three_state_split_reaches_the_envelope() {
        let grid =
            ValueGrid::sample(&[0, 1, 2], 3, 0.05, &[], |w| Ok(-(w[0] - 0.3).abs() - (w[1] - 0.3).abs())).unwrap();
        let env = concavify(grid);
        let belief = Belief::new(vec![0.5, 0.2, 0.3]).unwrap();
        let split = env.optimal_split(&belief).unwrap();
        let value: f64 = split
            .atoms()
            .iter()
            .map(|a| a.weight * (-(a.belief.weights()[0] - 0.3).abs() - (a.belief.weights()[1] - 0.3).abs()))
            .sum();
        assert!((value - env.eval_cav(&belief).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn rejects_points_off_the_face() {
        let env = concavify(sample_value(&example1_b(), &[0, 1], LINE_RESOLUTION).unwrap());
        assert!(matches!(env.eval_face(&[1.2, -0.2]), Err(EnvelopeError::OutsideFace)));
    }
}
