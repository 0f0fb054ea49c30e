//! The group Δ(p,K) of automorphisms that fix the generator of `p`
//! pointwise and the pencil `⟨p,K⟩` setwise.
//!
//! For the canonical pencil `⟨(∞,0), y=0⟩` the group is parametrized by
//! triples `(k, t, g)` with `k ≠ 0`, acting as
//! `(x, y) ↦ (kx + t, k²y + g)` and fixing every ideal point. Any other
//! pencil is reduced to the canonical one by a plane automorphism assembled
//! from three primitives, and the group is transported by conjugation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::field::{Fe, FieldSpec};
use crate::plane::{Circle, Pencil, Plane, PlaneError, Point};
use crate::report::{Report, Tally};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error(transparent)]
    Plane(#[from] PlaneError),
    #[error("the pencil group needs odd characteristic (q = {0})")]
    Char2(u32),
    #[error("{map} is not an automorphism: {witness}")]
    NotAutomorphism { map: String, witness: Value },
    #[error("{0} lies on the fixed generator")]
    OnFixedGenerator(Point),
    #[error("normalizer maps the canonical pencil to {got:?}, expected {expected:?}")]
    BadNormalizer { expected: Pencil, got: Pencil },
}

/// An element `(k, t, g)` of the canonical pencil group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[Fe; 3]", into = "[Fe; 3]")]
pub struct PencilAut {
    pub k: Fe,
    pub t: Fe,
    pub g: Fe,
}

impl From<[Fe; 3]> for PencilAut {
    fn from([k, t, g]: [Fe; 3]) -> Self {
        PencilAut { k, t, g }
    }
}

impl From<PencilAut> for [Fe; 3] {
    fn from(f: PencilAut) -> Self {
        [f.k, f.t, f.g]
    }
}

impl std::fmt::Display for PencilAut {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.k, self.t, self.g)
    }
}

impl PencilAut {
    pub fn new(k: u32, t: u32, g: u32) -> PencilAut {
        PencilAut {
            k: Fe(k),
            t: Fe(t),
            g: Fe(g),
        }
    }

    pub fn identity() -> PencilAut {
        PencilAut::new(1, 0, 0)
    }

    pub fn is_identity(&self) -> bool {
        *self == PencilAut::identity()
    }

    pub fn apply_point(&self, f: &FieldSpec, p: Point) -> Point {
        match p {
            Point::Affine { x, y } => Point::Affine {
                x: f.add(f.mul(self.k, x), self.t),
                y: f.add(f.mul(f.square(self.k), y), self.g),
            },
            ideal => ideal,
        }
    }

    /// `(a, b, c) ↦ (a, kb − 2at, at² − kbt + k²c + g)`.
    pub fn apply_circle(&self, f: &FieldSpec, c: Circle) -> Circle {
        let (k, t) = (self.k, self.t);
        let kb = f.mul(k, c.b);
        Circle {
            a: c.a,
            b: f.sub(kb, f.mul(f.add(c.a, c.a), t)),
            c: f.add(
                f.sub(f.mul(c.a, f.square(t)), f.mul(kb, t)),
                f.add(f.mul(f.square(k), c.c), self.g),
            ),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, f: &FieldSpec, other: &PencilAut) -> PencilAut {
        PencilAut {
            k: f.mul(self.k, other.k),
            t: f.add(f.mul(self.k, other.t), self.t),
            g: f.add(f.mul(f.square(self.k), other.g), self.g),
        }
    }

    pub fn inverse(&self, f: &FieldSpec) -> PencilAut {
        let ki = f.inv(self.k).expect("k is nonzero");
        PencilAut {
            k: ki,
            t: f.neg(f.mul(self.t, ki)),
            g: f.neg(f.mul(self.g, f.square(ki))),
        }
    }

    pub fn classify(&self, f: &FieldSpec) -> AutClass {
        let minus_one = f.neg(Fe::ONE);
        if self.k == Fe::ONE {
            match (self.t.is_zero(), self.g.is_zero()) {
                (true, true) => AutClass::Identity,
                (true, false) => AutClass::TranslationGenerators,
                (false, _) => AutClass::TranslationCircleDirection,
            }
        } else if self.k == minus_one {
            if self.g.is_zero() {
                AutClass::Symmetry
            } else {
                AutClass::Glide
            }
        } else {
            AutClass::Strain
        }
    }

    /// The unique affine fixed point of a strain, `(t/(1−k), g/(1−k²))`.
    pub fn strain_center(&self, f: &FieldSpec) -> Option<Point> {
        let one_k = f.sub(Fe::ONE, self.k);
        let one_k2 = f.sub(Fe::ONE, f.square(self.k));
        if one_k2.is_zero() {
            return None;
        }
        Some(Point::Affine {
            x: f.div(self.t, one_k).ok()?,
            y: f.div(self.g, one_k2).ok()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutClass {
    Identity,
    TranslationGenerators,
    TranslationCircleDirection,
    Strain,
    Symmetry,
    /// `k = −1, g ≠ 0`: fixpoint-free off the fixed generator, yet not a
    /// translation.
    Glide,
}

impl AutClass {
    pub fn is_translation(self) -> bool {
        matches!(
            self,
            AutClass::Identity | AutClass::TranslationGenerators | AutClass::TranslationCircleDirection
        )
    }
}

/// A permutation of the point set of a plane, stored as an index table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PermutationMap {
    images: Vec<u32>,
}

impl PermutationMap {
    pub fn identity(n: usize) -> Self {
        PermutationMap {
            images: (0..n as u32).collect(),
        }
    }

    /// Tabulates `f`; fails if the result is not a bijection.
    pub fn from_fn(plane: &Plane, f: impl Fn(Point) -> Point) -> Result<Self, Value> {
        let n = plane.points().len();
        let mut seen = vec![false; n];
        let mut images = Vec::with_capacity(n);
        for &p in plane.points() {
            let img = f(p);
            if !plane.contains_point(img) {
                return Err(json!({"reason": "image outside plane", "point": p}));
            }
            let i = plane.point_index(img);
            if seen[i] {
                return Err(json!({"reason": "not injective", "image": img}));
            }
            seen[i] = true;
            images.push(i as u32);
        }
        Ok(PermutationMap { images })
    }

    #[inline]
    pub fn apply_index(&self, i: usize) -> usize {
        self.images[i] as usize
    }

    pub fn apply(&self, plane: &Plane, p: Point) -> Point {
        plane.points()[self.apply_index(plane.point_index(p))]
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &PermutationMap) -> PermutationMap {
        PermutationMap {
            images: other.images.iter().map(|&i| self.images[i as usize]).collect(),
        }
    }

    pub fn inverse(&self) -> PermutationMap {
        let mut images = vec![0u32; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            images[j as usize] = i as u32;
        }
        PermutationMap { images }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i as u32 == j)
    }

    pub fn fixes(&self, i: usize) -> bool {
        self.images[i] as usize == i
    }

    /// Checks that circles map onto circles and generators onto generators.
    pub fn verify_automorphism(&self, plane: &Plane) -> Result<(), Value> {
        let pts = plane.points();
        for &c in plane.circles() {
            let image: Vec<Point> = plane
                .circle_points(c)
                .into_iter()
                .map(|p| pts[self.apply_index(plane.point_index(p))])
                .collect();
            let fitted = plane.circle_through(image[0], image[1], image[2]).ok();
            let ok = fitted.is_some_and(|d| image.iter().all(|&p| plane.incident(p, d)));
            if !ok {
                return Err(json!({"reason": "circle image is not a circle", "circle": c, "image": image}));
            }
        }
        for g in plane.generators() {
            let image: Vec<Point> = plane
                .generator_points(g)
                .into_iter()
                .map(|p| pts[self.apply_index(plane.point_index(p))])
                .collect();
            if !image.iter().all(|&p| plane.parallel(p, image[0])) {
                return Err(json!({"reason": "generator image is not a generator", "generator": g}));
            }
        }
        Ok(())
    }
}

/// Primitive automorphisms used to move the canonical pencil anywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum PlaneMap {
    /// `(x, y) ↦ (x, y + Q(x))`, `(∞, a) ↦ (∞, a + Q.a)`.
    AddCircle { circle: Circle },
    /// `(x, y) ↦ (x + s, y)`.
    ShiftX { s: Fe },
    /// `x ↦ 1/x` lifted to the plane: `(x, y) ↦ (1/x, y/x²)` for `x ≠ 0`,
    /// exchanging the generator `x = 0` with the ideal generator.
    Inversion,
}

impl PlaneMap {
    pub fn apply_point(&self, f: &FieldSpec, p: Point) -> Point {
        match (*self, p) {
            (PlaneMap::AddCircle { circle }, Point::Affine { x, y }) => Point::Affine {
                x,
                y: f.add(y, f.eval_quadratic(circle.a, circle.b, circle.c, x)),
            },
            (PlaneMap::AddCircle { circle }, Point::Ideal { a }) => Point::Ideal { a: f.add(a, circle.a) },
            (PlaneMap::ShiftX { s }, Point::Affine { x, y }) => Point::Affine { x: f.add(x, s), y },
            (PlaneMap::ShiftX { .. }, ideal) => ideal,
            (PlaneMap::Inversion, Point::Ideal { a }) => Point::Affine { x: Fe::ZERO, y: a },
            (PlaneMap::Inversion, Point::Affine { x, y }) if x.is_zero() => Point::Ideal { a: y },
            (PlaneMap::Inversion, Point::Affine { x, y }) => {
                let xi = f.inv(x).expect("x is nonzero");
                Point::Affine {
                    x: xi,
                    y: f.mul(y, f.square(xi)),
                }
            }
        }
    }

    pub fn apply_circle(&self, f: &FieldSpec, c: Circle) -> Circle {
        match *self {
            PlaneMap::AddCircle { circle } => Circle {
                a: f.add(c.a, circle.a),
                b: f.add(c.b, circle.b),
                c: f.add(c.c, circle.c),
            },
            PlaneMap::ShiftX { s } => Circle {
                a: c.a,
                b: f.sub(c.b, f.mul(f.add(c.a, c.a), s)),
                c: f.add(f.sub(f.mul(c.a, f.square(s)), f.mul(c.b, s)), c.c),
            },
            PlaneMap::Inversion => Circle { a: c.c, b: c.b, c: c.a },
        }
    }

    pub fn inverse(&self, f: &FieldSpec) -> PlaneMap {
        match *self {
            PlaneMap::AddCircle { circle } => PlaneMap::AddCircle {
                circle: Circle {
                    a: f.neg(circle.a),
                    b: f.neg(circle.b),
                    c: f.neg(circle.c),
                },
            },
            PlaneMap::ShiftX { s } => PlaneMap::ShiftX { s: f.neg(s) },
            PlaneMap::Inversion => PlaneMap::Inversion,
        }
    }
}

/// A composite automorphism carrying the canonical pencil onto a target
/// pencil; steps apply in order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalizer {
    pub steps: Vec<PlaneMap>,
}

impl Normalizer {
    /// Builds the normalizer for `pencil`, checking every primitive for the
    /// automorphism property on `plane` before use.
    pub fn for_pencil(plane: &Plane, pencil: &Pencil) -> Result<Normalizer, GroupError> {
        let f = plane.field();
        if !plane.incident(pencil.point, pencil.circle) {
            return Err(PlaneError::NotOnCircle(pencil.point, pencil.circle).into());
        }
        let steps = match pencil.point {
            Point::Ideal { .. } => vec![PlaneMap::AddCircle { circle: pencil.circle }],
            Point::Affine { x, .. } => vec![
                PlaneMap::Inversion,
                PlaneMap::ShiftX { s: x },
                PlaneMap::AddCircle { circle: pencil.circle },
            ],
        };
        for step in &steps {
            let perm = PermutationMap::from_fn(plane, |p| step.apply_point(f, p))
                .and_then(|m| m.verify_automorphism(plane).map(|_| m))
                .map_err(|witness| GroupError::NotAutomorphism {
                    map: format!("{step:?}"),
                    witness,
                })?;
            let back = PermutationMap::from_fn(plane, |p| step.inverse(f).apply_point(f, p)).map_err(|witness| {
                GroupError::NotAutomorphism {
                    map: format!("{step:?}"),
                    witness,
                }
            })?;
            if !perm.compose(&back).is_identity() {
                return Err(GroupError::NotAutomorphism {
                    map: format!("{step:?}"),
                    witness: json!("inverse mismatch"),
                });
            }
        }
        let n = Normalizer { steps };
        let canon = Pencil::canonical();
        let got = Pencil {
            point: n.forward_point(f, canon.point),
            circle: n.forward_circle(f, canon.circle),
        };
        if got != *pencil {
            return Err(GroupError::BadNormalizer { expected: *pencil, got });
        }
        Ok(n)
    }

    pub fn is_trivial(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn forward_point(&self, f: &FieldSpec, p: Point) -> Point {
        self.steps.iter().fold(p, |p, s| s.apply_point(f, p))
    }

    pub fn backward_point(&self, f: &FieldSpec, p: Point) -> Point {
        self.steps.iter().rev().fold(p, |p, s| s.inverse(f).apply_point(f, p))
    }

    pub fn forward_circle(&self, f: &FieldSpec, c: Circle) -> Circle {
        self.steps.iter().fold(c, |c, s| s.apply_circle(f, c))
    }

    pub fn backward_circle(&self, f: &FieldSpec, c: Circle) -> Circle {
        self.steps.iter().rev().fold(c, |c, s| s.inverse(f).apply_circle(f, c))
    }
}

/// Δ(p,K) for an arbitrary pencil, as parameters in normalized coordinates
/// plus the induced point permutations.
#[derive(Debug, Clone)]
pub struct DeltaGroup {
    field: FieldSpec,
    pencil: Pencil,
    normalizer: Normalizer,
    elements: Vec<PencilAut>,
    perms: Vec<PermutationMap>,
}

#[derive(Debug, Serialize)]
pub struct GroupExport {
    pub q: u32,
    pub pencil: Pencil,
    pub normalizer: Normalizer,
    pub elements: Vec<PencilAut>,
}

impl DeltaGroup {
    pub fn build(plane: &Plane, pencil: &Pencil) -> Result<DeltaGroup, GroupError> {
        let f = plane.field();
        if f.is_char2() {
            return Err(GroupError::Char2(f.q()));
        }
        let normalizer = Normalizer::for_pencil(plane, pencil)?;
        let mut elements = Vec::with_capacity((f.q() * f.q() * (f.q() - 1)) as usize);
        for k in f.nonzero() {
            for t in f.elements() {
                for g in f.elements() {
                    elements.push(PencilAut { k, t, g });
                }
            }
        }
        let perms = elements
            .iter()
            .map(|e| {
                PermutationMap::from_fn(plane, |p| {
                    normalizer.forward_point(f, e.apply_point(f, normalizer.backward_point(f, p)))
                })
                .expect("conjugate of a bijection is a bijection")
            })
            .collect();
        Ok(DeltaGroup {
            field: f.clone(),
            pencil: *pencil,
            normalizer,
            elements,
            perms,
        })
    }

    pub fn canonical(plane: &Plane) -> Result<DeltaGroup, GroupError> {
        DeltaGroup::build(plane, &Pencil::canonical())
    }

    pub fn pencil(&self) -> &Pencil {
        &self.pencil
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Elements in lexicographic `(k, t, g)` order.
    pub fn elements(&self) -> &[PencilAut] {
        &self.elements
    }

    pub fn perms(&self) -> &[PermutationMap] {
        &self.perms
    }

    pub fn perm(&self, i: usize) -> &PermutationMap {
        &self.perms[i]
    }

    pub fn index_of(&self, f: &PencilAut) -> Option<usize> {
        self.elements.binary_search(f).ok()
    }

    pub fn identity_index(&self) -> usize {
        self.index_of(&PencilAut::identity()).expect("identity is an element")
    }

    pub fn apply_point(&self, i: usize, p: Point) -> Point {
        let f = &self.field;
        let n = &self.normalizer;
        n.forward_point(f, self.elements[i].apply_point(f, n.backward_point(f, p)))
    }

    pub fn apply_circle(&self, i: usize, c: Circle) -> Circle {
        let f = &self.field;
        let n = &self.normalizer;
        n.forward_circle(f, self.elements[i].apply_circle(f, n.backward_circle(f, c)))
    }

    /// Whether `p` lies on the generator fixed pointwise by the group.
    pub fn on_fixed_generator(&self, p: Point) -> bool {
        p.generator() == self.pencil.point.generator()
    }

    /// Indices of the elements fixing `x`.
    pub fn stabilizer(&self, plane: &Plane, x: Point) -> Result<Vec<usize>, GroupError> {
        if self.on_fixed_generator(x) {
            return Err(GroupError::OnFixedGenerator(x));
        }
        let xi = plane.point_index(x);
        Ok((0..self.len()).filter(|&i| self.perms[i].fixes(xi)).collect())
    }

    pub fn stabilizer_elements(&self, plane: &Plane, x: Point) -> Result<Vec<PencilAut>, GroupError> {
        Ok(self
            .stabilizer(plane, x)?
            .into_iter()
            .map(|i| self.elements[i])
            .collect())
    }

    /// `{f(x) : f ∈ subset}` in point order.
    pub fn orbit(&self, plane: &Plane, subset: &[usize], x: Point) -> Vec<Point> {
        let xi = plane.point_index(x);
        let mut seen = vec![false; plane.points().len()];
        for &i in subset {
            seen[self.perms[i].apply_index(xi)] = true;
        }
        plane
            .points()
            .iter()
            .zip(seen)
            .filter_map(|(&p, s)| s.then_some(p))
            .collect()
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    pub fn census(&self) -> BTreeMap<AutClass, usize> {
        let mut census = BTreeMap::new();
        for e in &self.elements {
            *census.entry(e.classify(&self.field)).or_default() += 1;
        }
        census
    }

    /// Classification from the fixed-point structure of the permutation
    /// alone, independent of the parameters.
    pub fn classify_by_scan(&self, plane: &Plane, i: usize) -> Option<AutClass> {
        let perm = &self.perms[i];
        let q = plane.q() as usize;
        let fixed_gen = self.pencil.point.generator();
        let mut fixed_points = 0usize;
        let mut fixed_generators = 0usize;
        let mut pointwise_generators = 0usize;
        for g in plane.generators() {
            if g == fixed_gen {
                continue;
            }
            let pts = plane.generator_points(g);
            let fixed_here = pts.iter().filter(|&&p| perm.fixes(plane.point_index(p))).count();
            fixed_points += fixed_here;
            let image_gen = plane.points()[perm.apply_index(plane.point_index(pts[0]))].generator();
            if image_gen == g {
                fixed_generators += 1;
            }
            if fixed_here == q {
                pointwise_generators += 1;
            }
        }
        match (fixed_points, fixed_generators, pointwise_generators) {
            (n, g, w) if n == q * q && g == q && w == q => Some(AutClass::Identity),
            (0, g, 0) if g == q => Some(AutClass::TranslationGenerators),
            (0, 0, 0) => Some(AutClass::TranslationCircleDirection),
            (1, 1, 0) => Some(AutClass::Strain),
            (n, 1, 1) if n == q => Some(AutClass::Symmetry),
            (0, 1, 0) => Some(AutClass::Glide),
            _ => None,
        }
    }

    pub fn export(&self) -> GroupExport {
        GroupExport {
            q: self.field.q(),
            pencil: self.pencil,
            normalizer: self.normalizer.clone(),
            elements: self.elements.clone(),
        }
    }
}

/// Closed-form stabilizer of an affine point under the canonical group:
/// `{(k, u(1−k), v(1−k²)) : k ≠ 0}`.
pub fn canonical_stabilizer(f: &FieldSpec, x: Point) -> Result<Vec<PencilAut>, GroupError> {
    let Point::Affine { x: u, y: v } = x else {
        return Err(GroupError::OnFixedGenerator(x));
    };
    Ok(f.nonzero()
        .map(|k| PencilAut {
            k,
            t: f.mul(u, f.sub(Fe::ONE, k)),
            g: f.mul(v, f.sub(Fe::ONE, f.square(k))),
        })
        .collect())
}

/// Orbit of `x` under a set of permutations, in index order.
pub fn orbit_indices(perms: &[&PermutationMap], x: usize, n: usize) -> Vec<usize> {
    let mut seen = vec![false; n];
    for p in perms {
        seen[p.apply_index(x)] = true;
    }
    (0..n).filter(|&i| seen[i]).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum NormalTransitivityWitness {
    EmptyDomain,
    NotTransitive { from: usize, unreachable: usize },
    NoSeparator { fixed: usize, moved: usize },
}

/// Checks that `perms` (closed under composition) act transitively on
/// `domain` and that for `x ≠ y` some element fixes `x` but moves `y`.
pub fn normally_transitive(perms: &[&PermutationMap], domain: &[usize]) -> Result<(), NormalTransitivityWitness> {
    let Some(&first) = domain.first() else {
        return Err(NormalTransitivityWitness::EmptyDomain);
    };
    for &y in domain {
        if !perms.iter().any(|p| p.apply_index(first) == y) {
            return Err(NormalTransitivityWitness::NotTransitive {
                from: first,
                unreachable: y,
            });
        }
    }
    for &x in domain {
        let stab: Vec<&&PermutationMap> = perms.iter().filter(|p| p.fixes(x)).collect();
        for &y in domain {
            if x != y && !stab.iter().any(|p| !p.fixes(y)) {
                return Err(NormalTransitivityWitness::NoSeparator { fixed: x, moved: y });
            }
        }
    }
    Ok(())
}

/// Transitivity of the group on the points off the fixed generator.
pub fn verify_a1(plane: &Plane, group: &DeltaGroup) -> Report {
    let mut tally = Tally::new("A1", plane.q());
    let domain: Vec<Point> = plane
        .points()
        .iter()
        .copied()
        .filter(|&p| !group.on_fixed_generator(p))
        .collect();
    let orbit = group.orbit(plane, &group.all_indices(), domain[0]);
    for &y in &domain {
        tally.check(
            orbit.binary_search(&y).is_ok(),
            || json!({"from": domain[0], "unreachable": y}),
        );
    }
    tally.check(
        orbit.len() == domain.len(),
        || json!({"orbit_size": orbit.len(), "domain": domain.len()}),
    );
    tally.finish()
}

/// For every `r ∈ K∖{p}`, the stabilizer of `r` is transitive on
/// `K∖{p, r}`.
pub fn verify_a2(plane: &Plane, group: &DeltaGroup) -> Report {
    let mut tally = Tally::new("A2", plane.q());
    let pencil = group.pencil();
    let k_points: Vec<Point> = plane
        .circle_points(pencil.circle)
        .into_iter()
        .filter(|&x| x != pencil.point)
        .collect();
    for &r in &k_points {
        let stab = group.stabilizer(plane, r).expect("r is off the fixed generator");
        let rest: Vec<Point> = k_points.iter().copied().filter(|&x| x != r).collect();
        let Some(&x) = rest.first() else { continue };
        let orbit = group.orbit(plane, &stab, x);
        for &y in &rest {
            tally.check(
                orbit.binary_search(&y).is_ok(),
                || json!({"r": r, "x": x, "unreachable": y}),
            );
        }
        tally.check(
            orbit.len() == rest.len(),
            || json!({"r": r, "orbit_leaves_circle": orbit}),
        );
    }
    tally.finish()
}

/// Every circle avoiding `p` touches exactly one pencil member.
pub fn verify_a3(plane: &Plane, pencil: &Pencil) -> Report {
    let mut tally = Tally::new("A3", plane.q());
    let members = match plane.pencil_members(pencil) {
        Ok(m) => m,
        Err(e) => return Report::error("A3", plane.q(), e),
    };
    for &m in plane.circles() {
        if plane.incident(pencil.point, m) {
            continue;
        }
        let touching: Vec<Circle> = members
            .iter()
            .copied()
            .filter(|&l| plane.tangent_by_count(m, l).unwrap_or(false))
            .collect();
        tally.check(
            touching.len() == 1,
            || json!({"circle": m, "tangent_members": touching}),
        );
    }
    tally.finish()
}

/// A1, A2 and A3 for one pencil. Without a group (char 2) A1/A2 are
/// reported as errors.
pub fn verify_axioms(plane: &Plane, pencil: &Pencil, group: Option<&DeltaGroup>) -> Vec<Report> {
    let q = plane.q();
    let mut reports = match group {
        Some(g) => vec![verify_a1(plane, g), verify_a2(plane, g)],
        None => {
            let reason = DeltaGroup::build(plane, pencil)
                .err()
                .map_or("group unavailable".to_string(), |e| e.to_string());
            vec![Report::error("A1", q, &reason), Report::error("A2", q, &reason)]
        }
    };
    reports.push(verify_a3(plane, pencil));
    reports
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(q: u32) -> (Plane, DeltaGroup) {
        let plane = Plane::new(q).unwrap();
        let group = DeltaGroup::canonical(&plane).unwrap();
        (plane, group)
    }

    #[test]
    fn group_sizes() {
        assert_eq!(setup(5).1.len(), 100);
        assert_eq!(setup(3).1.len(), 18);
        let plane = Plane::new(5).unwrap();
        let pencil = Pencil {
            point: Point::affine(0, 0),
            circle: Circle::new(0, 0, 0),
        };
        let g = DeltaGroup::build(&plane, &pencil).unwrap();
        assert_eq!(g.len(), 100);
        for p in g.perms() {
            p.verify_automorphism(&plane).unwrap();
        }
        assert_eq!(
            DeltaGroup::canonical(&Plane::new(2).unwrap()).unwrap_err(),
            GroupError::Char2(2)
        );
    }

    #[test]
    fn apply_examples() {
        let f = FieldSpec::new(5).unwrap();
        assert_eq!(
            PencilAut::new(2, 1, 3).apply_point(&f, Point::affine(1, 1)),
            Point::affine(3, 2)
        );
        assert_eq!(
            PencilAut::new(1, 1, 0).apply_circle(&f, Circle::new(1, 0, 0)),
            Circle::new(1, 3, 1)
        );
        assert_eq!(
            PencilAut::new(3, 4, 2).apply_point(&f, Point::ideal(2)),
            Point::ideal(2)
        );
    }

    #[test]
    fn algebra_examples() {
        let f = FieldSpec::new(5).unwrap();
        assert_eq!(
            PencilAut::new(2, 0, 0).compose(&f, &PencilAut::new(1, 1, 0)),
            PencilAut::new(2, 2, 0)
        );
        let x = PencilAut::new(2, 1, 3);
        assert_eq!(x.inverse(&f), PencilAut::new(3, 2, 3));
        assert!(x.compose(&f, &x.inverse(&f)).is_identity());
    }

    #[test]
    fn composition_matches_action() {
        let (plane, g) = setup(5);
        let f = plane.field();
        for a in g.elements().iter().step_by(7) {
            for b in g.elements().iter().step_by(3) {
                let ab = a.compose(f, b);
                for &p in plane.points() {
                    assert_eq!(ab.apply_point(f, p), a.apply_point(f, b.apply_point(f, p)));
                }
            }
        }
    }

    #[test]
    fn elements_are_automorphisms_and_circle_formula_agrees() {
        for q in [3, 5, 7] {
            let (plane, g) = setup(q);
            let f = plane.field();
            for (i, e) in g.elements().iter().enumerate() {
                g.perm(i).verify_automorphism(&plane).unwrap();
                for &c in plane.circles() {
                    let mut pointwise: Vec<Point> = plane
                        .circle_points(c)
                        .into_iter()
                        .map(|p| e.apply_point(f, p))
                        .collect();
                    pointwise.sort();
                    let mut formula = plane.circle_points(e.apply_circle(f, c));
                    formula.sort();
                    assert_eq!(pointwise, formula);
                }
            }
        }
    }

    #[test]
    fn pencil_is_preserved_and_fixed_generator_pointwise() {
        let (plane, g) = setup(5);
        let f = plane.field();
        let members = plane.pencil_members(&Pencil::canonical()).unwrap();
        for e in g.elements() {
            for a in f.elements() {
                assert_eq!(e.apply_point(f, Point::Ideal { a }), Point::Ideal { a });
            }
            let mut image: Vec<Circle> = members.iter().map(|&c| e.apply_circle(f, c)).collect();
            image.sort();
            let mut sorted = members.clone();
            sorted.sort();
            assert_eq!(image, sorted);
            let expected = |c: Fe| Circle {
                a: Fe(0),
                b: Fe(0),
                c: f.add(f.mul(f.square(e.k), c), e.g),
            };
            for &m in &members {
                assert_eq!(e.apply_circle(f, m), expected(m.c));
            }
            let fixes_all = members.iter().all(|&m| e.apply_circle(f, m) == m);
            let pointwise = members
                .iter()
                .all(|&m| plane.circle_points(m).iter().all(|&p| e.apply_point(f, p) == p));
            assert!(!pointwise || e.is_identity());
            if e.g.is_zero() && e.k == Fe::ONE {
                assert!(fixes_all);
            }
        }
    }

    #[test]
    fn stabilizer_examples() {
        let (plane, g) = setup(5);
        let f = plane.field();
        let s = g.stabilizer_elements(&plane, Point::affine(0, 0)).unwrap();
        assert_eq!(s, (1..5).map(|k| PencilAut::new(k, 0, 0)).collect::<Vec<_>>());
        let s = g.stabilizer_elements(&plane, Point::affine(1, 1)).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.contains(&PencilAut::new(2, 4, 2)));
        let mut closed = canonical_stabilizer(f, Point::affine(1, 1)).unwrap();
        closed.sort();
        assert_eq!(s, closed);
        assert!(g.stabilizer(&plane, Point::ideal(2)).is_err());
        let (p3, g3) = setup(3);
        for &x in p3.affine_points() {
            assert_eq!(g3.stabilizer(&p3, x).unwrap().len(), 2);
        }
    }

    #[test]
    fn orbit_examples() {
        let (plane, g) = setup(5);
        let stab = g.stabilizer(&plane, Point::affine(0, 0)).unwrap();
        assert_eq!(
            g.orbit(&plane, &stab, Point::affine(1, 1)),
            vec![
                Point::affine(1, 1),
                Point::affine(2, 4),
                Point::affine(3, 4),
                Point::affine(4, 1)
            ]
        );
        assert_eq!(
            g.orbit(&plane, &stab, Point::affine(0, 1)),
            vec![Point::affine(0, 1), Point::affine(0, 4)]
        );
        assert_eq!(
            g.orbit(&plane, &g.all_indices(), Point::affine(0, 0)),
            plane.affine_points()
        );
    }

    #[test]
    fn classification_examples() {
        let f = FieldSpec::new(5).unwrap();
        assert_eq!(PencilAut::new(1, 0, 2).classify(&f), AutClass::TranslationGenerators);
        assert_eq!(PencilAut::new(4, 0, 0).classify(&f), AutClass::Symmetry);
        assert_eq!(PencilAut::new(4, 0, 1).classify(&f), AutClass::Glide);
        assert_eq!(PencilAut::new(2, 1, 1).classify(&f), AutClass::Strain);
        assert_eq!(PencilAut::new(2, 1, 1).strain_center(&f), Some(Point::affine(4, 3)));
    }

    #[test]
    fn classification_agrees_with_fixed_point_scan() {
        for q in [3, 5, 7] {
            for pencil in [
                Pencil::canonical(),
                Pencil {
                    point: Point::affine(1, 2),
                    circle: Circle::new(1, 1, 0),
                },
            ] {
                let plane = Plane::new(q).unwrap();
                let g = DeltaGroup::build(&plane, &pencil).unwrap();
                for (i, e) in g.elements().iter().enumerate() {
                    assert_eq!(
                        g.classify_by_scan(&plane, i),
                        Some(e.classify(plane.field())),
                        "q={q} {e}"
                    );
                }
            }
        }
    }

    #[test]
    fn census() {
        for q in [3u32, 5, 7, 11] {
            let (_, g) = setup(q);
            let c = g.census();
            let get = |k| c.get(&k).copied().unwrap_or(0) as u32;
            assert_eq!(get(AutClass::Identity), 1);
            assert_eq!(
                get(AutClass::TranslationGenerators) + get(AutClass::TranslationCircleDirection),
                q * q - 1
            );
            assert_eq!(get(AutClass::Strain), (q - 3) * q * q);
            assert_eq!(get(AutClass::Symmetry), q);
            assert_eq!(get(AutClass::Glide), q * (q - 1));
        }
    }

    #[test]
    fn symmetries_are_involutions_fixing_two_generators() {
        let (plane, g) = setup(5);
        let f = plane.field();
        for (i, e) in g.elements().iter().enumerate() {
            if e.classify(f) != AutClass::Symmetry {
                continue;
            }
            assert!(e.compose(f, e).is_identity());
            let pointwise = plane
                .generators()
                .into_iter()
                .filter(|&gen| {
                    plane
                        .generator_points(gen)
                        .iter()
                        .all(|&p| g.perm(i).fixes(plane.point_index(p)))
                })
                .count();
            assert_eq!(pointwise, 2);
        }
    }

    #[test]
    fn translations_form_a_normal_abelian_subgroup() {
        let (plane, g) = setup(5);
        let f = plane.field();
        let t: Vec<PencilAut> = g.elements().iter().copied().filter(|e| e.k == Fe::ONE).collect();
        for a in &t {
            for b in &t {
                assert_eq!(a.compose(f, b), b.compose(f, a));
            }
            for h in g.elements() {
                assert_eq!(h.compose(f, a).compose(f, &h.inverse(f)).k, Fe::ONE);
            }
        }
    }

    #[test]
    fn normalizer_carries_canonical_pencil() {
        let plane = Plane::new(7).unwrap();
        let f = plane.field();
        for &k in plane.circles().iter().step_by(5) {
            for p in plane.circle_points(k) {
                let pencil = Pencil { point: p, circle: k };
                let n = Normalizer::for_pencil(&plane, &pencil).unwrap();
                for &x in plane.points() {
                    assert_eq!(n.backward_point(f, n.forward_point(f, x)), x);
                }
                let mut image: Vec<Circle> = plane
                    .pencil_members(&Pencil::canonical())
                    .unwrap()
                    .into_iter()
                    .map(|c| n.forward_circle(f, c))
                    .collect();
                image.sort();
                let mut target = plane.pencil_members(&pencil).unwrap();
                target.sort();
                assert_eq!(image, target);
            }
        }
    }

    #[test]
    fn conjugated_group_fixes_its_pencil() {
        let plane = Plane::new(5).unwrap();
        let pencil = Pencil {
            point: Point::affine(2, 3),
            circle: Circle::new(4, 1, 0),
        };
        let g = DeltaGroup::build(&plane, &pencil).unwrap();
        let mut members = plane.pencil_members(&pencil).unwrap();
        members.sort();
        for i in 0..g.len() {
            let mut image: Vec<Circle> = members.iter().map(|&c| g.apply_circle(i, c)).collect();
            image.sort();
            assert_eq!(image, members);
            for a in plane.field().elements() {
                let p = Point::Affine { x: Fe(2), y: a };
                assert_eq!(g.perm(i).apply(&plane, p), p);
                assert_eq!(g.apply_point(i, p), p);
            }
        }
    }

    #[test]
    fn axioms_for_canonical_and_shifted_pencils() {
        for q in [3, 5] {
            let (plane, g) = setup(q);
            for r in verify_axioms(&plane, &Pencil::canonical(), Some(&g)) {
                assert!(r.is_pass(), "{r}");
            }
        }
        let plane = Plane::new(7).unwrap();
        let pencil = Pencil {
            point: Point::affine(0, 0),
            circle: Circle::new(0, 0, 0),
        };
        let g = DeltaGroup::build(&plane, &pencil).unwrap();
        for r in verify_axioms(&plane, &pencil, Some(&g)) {
            assert!(r.is_pass(), "{r}");
        }
    }

    #[test]
    fn a3_fails_in_char_2() {
        let plane = Plane::new(2).unwrap();
        let reports = verify_axioms(&plane, &Pencil::canonical(), None);
        assert_eq!(reports[0].status, crate::report::Status::Error);
        let a3 = &reports[2];
        assert_eq!(a3.status, crate::report::Status::Fail);
        // Every circle avoiding (∞,0) has a = 1; all four fail.
        assert_eq!(a3.stat_u64("violations"), Some(4));
    }

    #[test]
    fn normal_transitivity() {
        let (plane, g) = setup(5);
        let domain: Vec<usize> = plane.affine_points().iter().map(|&p| plane.point_index(p)).collect();
        let all: Vec<&PermutationMap> = g.perms().iter().collect();
        assert_eq!(normally_transitive(&all, &domain), Ok(()));
        let id = PermutationMap::identity(plane.points().len());
        assert!(matches!(
            normally_transitive(&[&id], &domain),
            Err(NormalTransitivityWitness::NotTransitive { .. })
        ));
        let translations: Vec<&PermutationMap> = g
            .elements()
            .iter()
            .zip(g.perms())
            .filter(|(e, _)| e.k == Fe::ONE)
            .map(|(_, p)| p)
            .collect();
        assert!(matches!(
            normally_transitive(&translations, &domain),
            Err(NormalTransitivityWitness::NoSeparator { .. })
        ));
    }
}
