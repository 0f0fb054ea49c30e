//! The miquelian Laguerre plane over GF(q) in its parabola model.
//!
//! Points are the affine points `(x, y)` together with the ideal points
//! `(∞, a)`. The circle with coefficients `(a, b, c)` is the graph of
//! `y = a x² + b x + c` extended by the ideal point `(∞, a)`. Two points are
//! parallel when they share a first coordinate, so the ideal points form one
//! generator of their own.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::field::{Fe, FieldError, FieldSpec};
use crate::report::{Report, Tally};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "t")]
pub enum Point {
    #[serde(rename = "A")]
    Affine { x: Fe, y: Fe },
    #[serde(rename = "I")]
    Ideal { a: Fe },
}

impl Point {
    pub fn affine(x: u32, y: u32) -> Point {
        Point::Affine { x: Fe(x), y: Fe(y) }
    }

    pub fn ideal(a: u32) -> Point {
        Point::Ideal { a: Fe(a) }
    }

    pub fn is_ideal(self) -> bool {
        matches!(self, Point::Ideal { .. })
    }

    pub fn generator(self) -> Generator {
        match self {
            Point::Affine { x, .. } => Generator::Affine { x },
            Point::Ideal { .. } => Generator::Ideal,
        }
    }

    pub fn to_json(self) -> Value {
        serde_json::to_value(self).expect("point serializes")
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Point::Affine { x, y } => write!(f, "({x},{y})"),
            Point::Ideal { a } => write!(f, "(∞,{a})"),
        }
    }
}

/// A parallel class of points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "t")]
pub enum Generator {
    #[serde(rename = "A")]
    Affine { x: Fe },
    #[serde(rename = "I")]
    Ideal,
}

/// The circle `{(x, ax²+bx+c)} ∪ {(∞, a)}`, serialized as `[a, b, c]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[Fe; 3]", into = "[Fe; 3]")]
pub struct Circle {
    pub a: Fe,
    pub b: Fe,
    pub c: Fe,
}

impl Circle {
    pub fn new(a: u32, b: u32, c: u32) -> Circle {
        Circle {
            a: Fe(a),
            b: Fe(b),
            c: Fe(c),
        }
    }

    pub fn ideal_point(self) -> Point {
        Point::Ideal { a: self.a }
    }

    pub fn to_json(self) -> Value {
        json!([self.a, self.b, self.c])
    }
}

impl From<[Fe; 3]> for Circle {
    fn from([a, b, c]: [Fe; 3]) -> Self {
        Circle { a, b, c }
    }
}

impl From<Circle> for [Fe; 3] {
    fn from(c: Circle) -> Self {
        [c.a, c.b, c.c]
    }
}

impl std::fmt::Display for Circle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{},{}]", self.a, self.b, self.c)
    }
}

/// The circles touching `circle` at `point`, together with `circle` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pencil {
    pub point: Point,
    pub circle: Circle,
}

impl Pencil {
    /// `⟨(∞,0), y = 0⟩`, the pencil all closed-form formulas refer to.
    pub fn canonical() -> Pencil {
        Pencil {
            point: Point::ideal(0),
            circle: Circle::new(0, 0, 0),
        }
    }

    pub fn is_canonical(&self) -> bool {
        *self == Pencil::canonical()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlaneError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("parallel points {0} and {1}")]
    ParallelPoints(Point, Point),
    #[error("identical circles {0}")]
    IdenticalCircles(Circle),
    #[error("point {0} is not on circle {1}")]
    NotOnCircle(Point, Circle),
    #[error("point {0} already lies on circle {1}")]
    OnCircle(Point, Circle),
    #[error("point {0} does not belong to GF({1}) plane")]
    ForeignPoint(Point, u32),
    #[error("A3 fails for circle {circle}: {} tangent pencil members", tangent_members.len())]
    A3Failure {
        circle: Circle,
        tangent_members: Vec<Circle>,
    },
}

#[derive(Debug, Clone)]
pub struct Plane {
    field: FieldSpec,
    points: Vec<Point>,
    circles: Vec<Circle>,
}

#[derive(Debug, Serialize)]
pub struct PlaneExport {
    pub q: u32,
    pub points: Vec<Point>,
    pub circles: Vec<Circle>,
    pub generators: Vec<Generator>,
}

impl Plane {
    pub fn build(field: FieldSpec) -> Plane {
        let q = field.q();
        let mut points = Vec::with_capacity((q * q + q) as usize);
        for x in field.elements() {
            for y in field.elements() {
                points.push(Point::Affine { x, y });
            }
        }
        points.extend(field.elements().map(|a| Point::Ideal { a }));
        let mut circles = Vec::with_capacity((q * q * q) as usize);
        for a in field.elements() {
            for b in field.elements() {
                for c in field.elements() {
                    circles.push(Circle { a, b, c });
                }
            }
        }
        Plane { field, points, circles }
    }

    pub fn new(q: u32) -> Result<Plane, FieldError> {
        Ok(Plane::build(FieldSpec::new(q)?))
    }

    #[inline]
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.field.q()
    }

    /// Points in lexicographic order: affine points by `(x, y)`, then ideal.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Circles in lexicographic order of `(a, b, c)`.
    pub fn circles(&self) -> &[Circle] {
        &self.circles
    }

    pub fn generators(&self) -> Vec<Generator> {
        let mut g: Vec<Generator> = self.field.elements().map(|x| Generator::Affine { x }).collect();
        g.push(Generator::Ideal);
        g
    }

    pub fn generator_points(&self, g: Generator) -> Vec<Point> {
        match g {
            Generator::Affine { x } => self.field.elements().map(|y| Point::Affine { x, y }).collect(),
            Generator::Ideal => self.field.elements().map(|a| Point::Ideal { a }).collect(),
        }
    }

    pub fn affine_points(&self) -> &[Point] {
        let q = self.q() as usize;
        &self.points[..q * q]
    }

    #[inline]
    pub fn point_index(&self, p: Point) -> usize {
        let q = self.q() as usize;
        match p {
            Point::Affine { x, y } => x.0 as usize * q + y.0 as usize,
            Point::Ideal { a } => q * q + a.0 as usize,
        }
    }

    #[inline]
    pub fn circle_index(&self, c: Circle) -> usize {
        let q = self.q() as usize;
        (c.a.0 as usize * q + c.b.0 as usize) * q + c.c.0 as usize
    }

    pub fn contains_point(&self, p: Point) -> bool {
        match p {
            Point::Affine { x, y } => self.field.contains(x) && self.field.contains(y),
            Point::Ideal { a } => self.field.contains(a),
        }
    }

    #[inline]
    pub fn eval(&self, c: Circle, x: Fe) -> Fe {
        self.field.eval_quadratic(c.a, c.b, c.c, x)
    }

    /// The point set of a circle: affine points by increasing `x`, then the
    /// ideal point.
    pub fn circle_points(&self, c: Circle) -> Vec<Point> {
        let mut pts: Vec<Point> = self
            .field
            .elements()
            .map(|x| Point::Affine { x, y: self.eval(c, x) })
            .collect();
        pts.push(c.ideal_point());
        pts
    }

    pub fn parallel(&self, u: Point, v: Point) -> bool {
        u.generator() == v.generator()
    }

    pub fn incident(&self, p: Point, c: Circle) -> bool {
        match p {
            Point::Affine { x, y } => self.eval(c, x) == y,
            Point::Ideal { a } => a == c.a,
        }
    }

    pub fn circle_through(&self, p1: Point, p2: Point, p3: Point) -> Result<Circle, PlaneError> {
        for (u, v) in [(p1, p2), (p1, p3), (p2, p3)] {
            if self.parallel(u, v) {
                return Err(PlaneError::ParallelPoints(u, v));
            }
        }
        let f = &self.field;
        let mut ideal = None;
        let mut affine = Vec::with_capacity(3);
        for p in [p1, p2, p3] {
            match p {
                Point::Ideal { a } => ideal = Some(a),
                Point::Affine { x, y } => affine.push((x, y)),
            }
        }
        let circle = match ideal {
            Some(a) => {
                let (x1, y1) = affine[0];
                let (x2, y2) = affine[1];
                let r1 = f.sub(y1, f.mul(a, f.square(x1)));
                let r2 = f.sub(y2, f.mul(a, f.square(x2)));
                let b = f.div(f.sub(r2, r1), f.sub(x2, x1))?;
                let c = f.sub(r1, f.mul(b, x1));
                Circle { a, b, c }
            }
            None => {
                // Newton divided differences.
                let (x1, y1) = affine[0];
                let (x2, y2) = affine[1];
                let (x3, y3) = affine[2];
                let d12 = f.div(f.sub(y2, y1), f.sub(x2, x1))?;
                let d23 = f.div(f.sub(y3, y2), f.sub(x3, x2))?;
                let a = f.div(f.sub(d23, d12), f.sub(x3, x1))?;
                let b = f.sub(d12, f.mul(a, f.add(x1, x2)));
                let c = f.add(f.sub(y1, f.mul(d12, x1)), f.mul(a, f.mul(x1, x2)));
                Circle { a, b, c }
            }
        };
        Ok(circle)
    }

    /// Common points of two distinct circles, by evaluation.
    pub fn intersection(&self, c1: Circle, c2: Circle) -> Result<Vec<Point>, PlaneError> {
        if c1 == c2 {
            return Err(PlaneError::IdenticalCircles(c1));
        }
        Ok(self.intersection_unchecked(c1, c2))
    }

    pub(crate) fn intersection_unchecked(&self, c1: Circle, c2: Circle) -> Vec<Point> {
        let mut pts: Vec<Point> = self
            .field
            .elements()
            .filter_map(|x| {
                let y = self.eval(c1, x);
                (y == self.eval(c2, x)).then_some(Point::Affine { x, y })
            })
            .collect();
        if c1.a == c2.a {
            pts.push(c1.ideal_point());
        }
        pts
    }

    /// Number of common points of two circles, computed algebraically.
    /// Returns `q + 1` for equal circles.
    pub fn meet_count(&self, c1: Circle, c2: Circle) -> usize {
        let f = &self.field;
        let da = f.sub(c1.a, c2.a);
        let db = f.sub(c1.b, c2.b);
        let dc = f.sub(c1.c, c2.c);
        if da.is_zero() {
            if db.is_zero() {
                if dc.is_zero() {
                    self.q() as usize + 1
                } else {
                    1
                }
            } else {
                2
            }
        } else {
            f.quadratic_root_count(da, db, dc)
        }
    }

    #[inline]
    pub fn meets(&self, c1: Circle, c2: Circle) -> bool {
        self.meet_count(c1, c2) > 0
    }

    /// Tangency `|C1 ∩ C2| = 1` via the discriminant.
    pub fn tangent(&self, c1: Circle, c2: Circle) -> Result<bool, PlaneError> {
        if c1 == c2 {
            return Err(PlaneError::IdenticalCircles(c1));
        }
        Ok(self.meet_count(c1, c2) == 1)
    }

    /// Tangency by counting the intersection; authoritative in every
    /// characteristic.
    pub fn tangent_by_count(&self, c1: Circle, c2: Circle) -> Result<bool, PlaneError> {
        Ok(self.intersection(c1, c2)?.len() == 1)
    }

    /// The point where two tangent circles touch.
    pub fn touching_point(&self, c1: Circle, c2: Circle) -> Option<Point> {
        if c1 == c2 {
            return None;
        }
        let pts = self.intersection_unchecked(c1, c2);
        (pts.len() == 1).then(|| pts[0])
    }

    /// `(p, K, r)°`: the circle through `r` touching `K` at `p`.
    pub fn touching_circle(&self, p: Point, k: Circle, r: Point) -> Result<Circle, PlaneError> {
        if !self.incident(p, k) {
            return Err(PlaneError::NotOnCircle(p, k));
        }
        if self.parallel(p, r) {
            return Err(PlaneError::ParallelPoints(p, r));
        }
        if self.incident(r, k) {
            return Err(PlaneError::OnCircle(r, k));
        }
        let f = &self.field;
        let circle = match (p, r) {
            (Point::Ideal { .. }, Point::Affine { x, y }) => {
                let c = f.sub(y, f.add(f.mul(k.a, f.square(x)), f.mul(k.b, x)));
                Circle { c, ..k }
            }
            (Point::Affine { x: x0, .. }, r) => {
                let m = match r {
                    Point::Affine { x, y } => f.div(f.sub(y, self.eval(k, x)), f.square(f.sub(x, x0)))?,
                    Point::Ideal { a } => f.sub(a, k.a),
                };
                self.add_square_multiple(k, m, x0)
            }
            (Point::Ideal { .. }, Point::Ideal { .. }) => unreachable!("parallel pair handled above"),
        };
        Ok(circle)
    }

    /// `K + m (x - x0)²`.
    fn add_square_multiple(&self, k: Circle, m: Fe, x0: Fe) -> Circle {
        let f = &self.field;
        Circle {
            a: f.add(k.a, m),
            b: f.sub(k.b, f.mul(f.add(m, m), x0)),
            c: f.add(k.c, f.mul(m, f.square(x0))),
        }
    }

    /// `xK`: the point of `K` on the generator of `x`.
    pub fn parallel_point(&self, x: Point, k: Circle) -> Point {
        match x {
            Point::Affine { x, .. } => Point::Affine { x, y: self.eval(k, x) },
            Point::Ideal { .. } => k.ideal_point(),
        }
    }

    /// `⟨p, K⟩` in closed form; `K` comes first.
    pub fn pencil(&self, p: Point, k: Circle) -> Result<Vec<Circle>, PlaneError> {
        if !self.incident(p, k) {
            return Err(PlaneError::NotOnCircle(p, k));
        }
        let f = &self.field;
        let members = match p {
            Point::Ideal { .. } => (0..self.q())
                .map(|s| Circle {
                    c: f.add(k.c, Fe(s)),
                    ..k
                })
                .collect(),
            Point::Affine { x, .. } => (0..self.q()).map(|m| self.add_square_multiple(k, Fe(m), x)).collect(),
        };
        Ok(members)
    }

    /// `⟨p, K⟩` by scanning every circle for a single common point `p`.
    pub fn pencil_by_scan(&self, p: Point, k: Circle) -> Result<Vec<Circle>, PlaneError> {
        if !self.incident(p, k) {
            return Err(PlaneError::NotOnCircle(p, k));
        }
        let mut members = vec![k];
        members.extend(
            self.circles
                .iter()
                .copied()
                .filter(|&c| c != k && self.intersection_unchecked(c, k) == [p]),
        );
        Ok(members)
    }

    pub fn pencil_members(&self, pencil: &Pencil) -> Result<Vec<Circle>, PlaneError> {
        self.pencil(pencil.point, pencil.circle)
    }

    /// `⟨x, y⟩`: every circle through two nonparallel points.
    pub fn joining_pencil(&self, x: Point, y: Point) -> Result<Vec<Circle>, PlaneError> {
        if self.parallel(x, y) {
            return Err(PlaneError::ParallelPoints(x, y));
        }
        match (x, y) {
            (Point::Ideal { a }, Point::Affine { x, y }) | (Point::Affine { x, y }, Point::Ideal { a }) => {
                let f = &self.field;
                Ok(self
                    .field
                    .elements()
                    .map(|b| Circle {
                        a,
                        b,
                        c: f.sub(y, f.add(f.mul(a, f.square(x)), f.mul(b, x))),
                    })
                    .collect())
            }
            _ => self
                .field
                .elements()
                .map(|a| self.circle_through(Point::Ideal { a }, x, y))
                .collect(),
        }
    }

    /// The unique member of `pencil` touching `m`, with the point of contact
    /// (the base point of `m`).
    pub fn pencil_tangent(&self, m: Circle, pencil: &Pencil) -> Result<(Circle, Point), PlaneError> {
        if self.incident(pencil.point, m) {
            return Err(PlaneError::OnCircle(pencil.point, m));
        }
        let touching: Vec<(Circle, Point)> = self
            .pencil_members(pencil)?
            .into_iter()
            .filter_map(|l| self.touching_point(m, l).map(|pt| (l, pt)))
            .collect();
        if touching.len() == 1 {
            Ok(touching[0])
        } else {
            Err(PlaneError::A3Failure {
                circle: m,
                tangent_members: touching.into_iter().map(|(l, _)| l).collect(),
            })
        }
    }

    /// Base point of `m` with respect to the canonical pencil, in closed
    /// form: `(-b/2a, c - b²/4a)` and the member `(0, 0, c - b²/4a)`.
    pub fn canonical_base_point(&self, m: Circle) -> Result<(Circle, Point), PlaneError> {
        if m.a.is_zero() {
            return Err(PlaneError::OnCircle(Point::ideal(0), m));
        }
        if self.field.is_char2() {
            return self.pencil_tangent(m, &Pencil::canonical());
        }
        let f = &self.field;
        let two_a = f.add(m.a, m.a);
        let x = f.neg(f.div(m.b, two_a)?);
        let h = f.sub(m.c, f.div(f.square(m.b), f.add(two_a, two_a))?);
        Ok((Circle::new(0, 0, h.0), Point::Affine { x, y: h }))
    }

    /// Exhaustive check of the four Laguerre axioms.
    pub fn verify_axioms(&self) -> Report {
        let mut tally = Tally::new("LAG", self.q());
        let n_points = self.points.len();

        // (1): count each pairwise-nonparallel triple over all circles.
        let mut triples: HashMap<(usize, usize, usize), u32> = HashMap::new();
        for &c in &self.circles {
            let pts: Vec<usize> = self.circle_points(c).into_iter().map(|p| self.point_index(p)).collect();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    for k in j + 1..pts.len() {
                        let mut t = [pts[i], pts[j], pts[k]];
                        t.sort_unstable();
                        *triples.entry((t[0], t[1], t[2])).or_default() += 1;
                    }
                }
            }
        }
        let mut ax1 = 0u64;
        for i in 0..n_points {
            for j in i + 1..n_points {
                if self.parallel(self.points[i], self.points[j]) {
                    continue;
                }
                for k in j + 1..n_points {
                    if self.parallel(self.points[i], self.points[k]) || self.parallel(self.points[j], self.points[k]) {
                        continue;
                    }
                    ax1 += 1;
                    let count = triples.get(&(i, j, k)).copied().unwrap_or(0);
                    tally.check(count == 1, || {
                        json!({"axiom": 1, "points": [self.points[i], self.points[j], self.points[k]], "circles": count})
                    });
                }
            }
        }
        // Every recorded triple must have been a nonparallel one.
        let recorded: usize = triples.len();
        tally.check(
            recorded as u64 == ax1,
            || json!({"axiom": 1, "recorded_triples": recorded, "expected": ax1}),
        );

        // (2): for each K and p ∈ K, circles meeting K only in p cover every
        // admissible r exactly once.
        let mut ax2 = 0u64;
        let mut cover = vec![0u32; n_points];
        for &k in &self.circles {
            let k_pts = self.circle_points(k);
            let mut touching: Vec<Vec<Circle>> = vec![Vec::new(); k_pts.len()];
            for &l in &self.circles {
                if l == k {
                    continue;
                }
                let common = self.intersection_unchecked(k, l);
                if let [p] = common[..] {
                    let slot = k_pts.iter().position(|&kp| kp == p).expect("common point lies on K");
                    touching[slot].push(l);
                }
            }
            for (slot, &p) in k_pts.iter().enumerate() {
                cover.iter_mut().for_each(|c| *c = 0);
                for &l in &touching[slot] {
                    for r in self.circle_points(l) {
                        if r != p {
                            cover[self.point_index(r)] += 1;
                        }
                    }
                }
                for (ri, &r) in self.points.iter().enumerate() {
                    if self.parallel(p, r) || self.incident(r, k) {
                        continue;
                    }
                    ax2 += 1;
                    tally.check(
                        cover[ri] == 1,
                        || json!({"axiom": 2, "circle": k, "p": p, "r": r, "touching_circles": cover[ri]}),
                    );
                }
            }
        }

        // (3)
        let mut ax3 = 0u64;
        for &c in &self.circles {
            let pts = self.circle_points(c);
            for &x in &self.points {
                ax3 += 1;
                let n = pts.iter().filter(|&&p| self.parallel(p, x)).count();
                tally.check(
                    n == 1,
                    || json!({"axiom": 3, "point": x, "circle": c, "parallel_points": n}),
                );
            }
        }

        // (4)
        let witness = self
            .circles
            .iter()
            .find(|&&c| {
                let n = self.circle_points(c).len();
                n >= 3 && n < n_points
            })
            .copied();
        tally.check(
            witness.is_some(),
            || json!({"axiom": 4, "reason": "every circle is trivial"}),
        );

        tally.stat("axiom1_triples", ax1);
        tally.stat("axiom2_cases", ax2);
        tally.stat("axiom3_cases", ax3);
        tally.stat("points", n_points as u64);
        tally.stat("circles", self.circles.len() as u64);
        tally.finish()
    }

    /// The derived affine plane at `p`, verified exhaustively.
    pub fn derived_affine(&self, p: Point) -> (DerivedAffine, Report) {
        let points: Vec<Point> = self.points.iter().copied().filter(|&x| !self.parallel(x, p)).collect();
        let mut lines: Vec<Vec<Point>> = Vec::new();
        for &c in &self.circles {
            if self.incident(p, c) {
                lines.push(self.circle_points(c).into_iter().filter(|&x| x != p).collect());
            }
        }
        for g in self.generators() {
            if g != p.generator() {
                lines.push(self.generator_points(g));
            }
        }
        lines.iter_mut().for_each(|l| l.sort_unstable());
        lines.sort();
        let affine = DerivedAffine { base: p, points, lines };
        let report = affine.verify(self);
        (affine, report)
    }

    pub fn export(&self) -> PlaneExport {
        PlaneExport {
            q: self.q(),
            points: self.points.clone(),
            circles: self.circles.clone(),
            generators: self.generators(),
        }
    }
}

/// Points nonparallel to a base point, with the circles through it (base
/// point removed) and the remaining generators as lines.
#[derive(Debug, Clone)]
pub struct DerivedAffine {
    pub base: Point,
    pub points: Vec<Point>,
    pub lines: Vec<Vec<Point>>,
}

impl DerivedAffine {
    pub fn order(&self) -> usize {
        self.lines.first().map_or(0, Vec::len)
    }

    fn verify(&self, plane: &Plane) -> Report {
        let mut tally = Tally::new("AFF", plane.q());
        let n = plane.points().len();
        let mut local = vec![usize::MAX; n];
        for (i, &x) in self.points.iter().enumerate() {
            local[plane.point_index(x)] = i;
        }
        let m = self.points.len();
        for line in &self.lines {
            tally.check(
                line.len() >= 2 && line.iter().all(|&x| local[plane.point_index(x)] != usize::MAX),
                || json!({"property": "line_points", "line": line}),
            );
        }
        let idx: Vec<Vec<usize>> = self
            .lines
            .iter()
            .map(|l| l.iter().map(|&x| local[plane.point_index(x)]).collect())
            .collect();

        // Two points lie on exactly one line.
        let mut pair = vec![0u32; m * m];
        for l in &idx {
            for &i in l {
                for &j in l {
                    if i != j {
                        pair[i * m + j] += 1;
                    }
                }
            }
        }
        for i in 0..m {
            for j in i + 1..m {
                let count = pair[i * m + j];
                tally.check(
                    count == 1,
                    || json!({"property": "join", "points": [self.points[i], self.points[j]], "lines": count}),
                );
            }
        }

        // Playfair.
        let mut member = vec![false; m];
        for (li, l) in idx.iter().enumerate() {
            member.iter_mut().for_each(|b| *b = false);
            l.iter().for_each(|&i| member[i] = true);
            let disjoint: Vec<&Vec<usize>> = idx
                .iter()
                .enumerate()
                .filter(|&(lj, other)| lj != li && other.iter().all(|&i| !member[i]))
                .map(|(_, other)| other)
                .collect();
            for (x, _) in member.iter().enumerate().filter(|(_, &on)| !on) {
                let through = disjoint.iter().filter(|o| o.contains(&x)).count();
                tally.check(through == 1, || {
                    json!({"property": "playfair", "line": self.lines[li], "point": self.points[x], "parallels": through})
                });
            }
        }

        // Three noncollinear points.
        let triangle = m >= 3
            && idx
                .iter()
                .find(|l| l.contains(&0) && l.contains(&1))
                .is_some_and(|l| (2..m).any(|k| !l.contains(&k)));
        tally.check(triangle, || json!({"property": "triangle"}));
        tally.stat("points", m as u64);
        tally.stat("lines", self.lines.len() as u64);
        tally.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(q: u32) -> Plane {
        Plane::new(q).unwrap()
    }

    fn pt(x: u32, y: u32) -> Point {
        Point::affine(x, y)
    }

    #[test]
    fn cardinalities() {
        for (q, np, nc) in [(2, 6, 8), (3, 12, 27), (5, 30, 125)] {
            let pl = plane(q);
            assert_eq!(pl.points().len(), np);
            assert_eq!(pl.circles().len(), nc);
            assert!(pl
                .circles()
                .iter()
                .all(|&c| pl.circle_points(c).len() == q as usize + 1));
        }
        assert!(plane(2).field().is_char2());
    }

    #[test]
    fn indices_follow_enumeration_order() {
        let pl = plane(5);
        for (i, &p) in pl.points().iter().enumerate() {
            assert_eq!(pl.point_index(p), i);
        }
        for (i, &c) in pl.circles().iter().enumerate() {
            assert_eq!(pl.circle_index(c), i);
        }
        let mut sorted = pl.points().to_vec();
        sorted.sort();
        assert_eq!(sorted, pl.points());
    }

    #[test]
    fn parallel_and_incidence() {
        let pl = plane(5);
        assert!(pl.parallel(pt(1, 0), pt(1, 4)));
        assert!(pl.parallel(Point::ideal(0), Point::ideal(3)));
        assert!(!pl.parallel(pt(1, 0), Point::ideal(0)));
        let c = Circle::new(1, 0, 0);
        assert!(pl.incident(pt(2, 4), c));
        assert!(pl.incident(Point::ideal(1), c));
        assert!(!pl.incident(pt(1, 3), c));
    }

    #[test]
    fn circle_through_examples() {
        let pl = plane(5);
        assert_eq!(
            pl.circle_through(pt(0, 0), pt(1, 1), pt(2, 4)),
            Ok(Circle::new(1, 0, 0))
        );
        assert_eq!(
            pl.circle_through(pt(0, 0), pt(1, 1), Point::ideal(0)),
            Ok(Circle::new(0, 1, 0))
        );
        assert_eq!(
            pl.circle_through(pt(0, 0), pt(0, 1), pt(2, 4)),
            Err(PlaneError::ParallelPoints(pt(0, 0), pt(0, 1)))
        );
    }

    #[test]
    fn circle_through_recovers_every_circle() {
        for q in [3, 5, 7] {
            let pl = plane(q);
            for &c in pl.circles() {
                let pts = pl.circle_points(c);
                assert_eq!(pl.circle_through(pts[0], pts[2], pts[1]), Ok(c));
                assert_eq!(pl.circle_through(pts[q as usize], pts[1], pts[0]), Ok(c));
            }
        }
    }

    #[test]
    fn intersection_examples() {
        let pl = plane(5);
        assert_eq!(
            pl.intersection(Circle::new(1, 0, 0), Circle::new(0, 0, 0)),
            Ok(vec![pt(0, 0)])
        );
        assert_eq!(
            pl.intersection(Circle::new(1, 0, 0), Circle::new(0, 0, 1)),
            Ok(vec![pt(1, 1), pt(4, 1)])
        );
        assert_eq!(
            pl.intersection(Circle::new(0, 0, 0), Circle::new(0, 0, 1)),
            Ok(vec![Point::ideal(0)])
        );
        let c = Circle::new(1, 2, 3);
        assert_eq!(pl.intersection(c, c), Err(PlaneError::IdenticalCircles(c)));
    }

    #[test]
    fn tangency_examples() {
        let pl = plane(5);
        assert_eq!(pl.tangent(Circle::new(1, 0, 0), Circle::new(0, 0, 0)), Ok(true));
        assert_eq!(pl.tangent(Circle::new(1, 0, 0), Circle::new(0, 0, 1)), Ok(false));
        let pl2 = plane(2);
        assert_eq!(pl2.tangent(Circle::new(1, 0, 0), Circle::new(0, 0, 1)), Ok(true));
        assert_eq!(
            pl2.tangent_by_count(Circle::new(1, 0, 0), Circle::new(0, 0, 1)),
            Ok(true)
        );
    }

    #[test]
    fn fast_paths_agree_with_intersection_counting() {
        for q in [2, 3, 5, 7] {
            let pl = plane(q);
            for &c1 in pl.circles() {
                for &c2 in pl.circles() {
                    if c1 == c2 {
                        continue;
                    }
                    let n = pl.intersection(c1, c2).unwrap().len();
                    assert_eq!(pl.meet_count(c1, c2), n, "{c1} {c2}");
                    assert_eq!(pl.tangent(c1, c2).unwrap(), n == 1);
                    if q > 2 {
                        assert!(n <= 2);
                    }
                }
            }
        }
    }

    #[test]
    fn touching_circle_examples() {
        let pl = plane(5);
        let k = Circle::new(0, 0, 0);
        assert_eq!(
            pl.touching_circle(Point::ideal(0), k, pt(0, 1)),
            Ok(Circle::new(0, 0, 1))
        );
        assert_eq!(pl.touching_circle(pt(0, 0), k, pt(1, 1)), Ok(Circle::new(1, 0, 0)));
        assert_eq!(
            pl.touching_circle(pt(0, 0), k, pt(0, 1)),
            Err(PlaneError::ParallelPoints(pt(0, 0), pt(0, 1)))
        );
        assert_eq!(
            pl.touching_circle(pt(1, 1), k, pt(0, 1)),
            Err(PlaneError::NotOnCircle(pt(1, 1), k))
        );
        assert_eq!(
            pl.touching_circle(pt(0, 0), k, pt(2, 0)),
            Err(PlaneError::OnCircle(pt(2, 0), k))
        );
    }

    #[test]
    fn touching_circle_is_unique_by_scan() {
        for q in [2, 3, 5] {
            let pl = plane(q);
            for &k in pl.circles() {
                for p in pl.circle_points(k) {
                    for &r in pl.points() {
                        if pl.parallel(p, r) || pl.incident(r, k) {
                            continue;
                        }
                        let l = pl.touching_circle(p, k, r).unwrap();
                        let brute: Vec<Circle> = pl
                            .circles()
                            .iter()
                            .copied()
                            .filter(|&c| pl.incident(r, c) && c != k && pl.intersection(c, k).unwrap() == [p])
                            .collect();
                        assert_eq!(brute, vec![l]);
                    }
                }
            }
        }
    }

    #[test]
    fn parallel_point_examples() {
        let pl = plane(5);
        let k = Circle::new(1, 0, 0);
        assert_eq!(pl.parallel_point(pt(2, 3), k), pt(2, 4));
        assert_eq!(pl.parallel_point(Point::ideal(4), k), Point::ideal(1));
        assert_eq!(pl.parallel_point(pt(3, 4), k), pt(3, 4));
    }

    #[test]
    fn pencil_examples() {
        let pl = plane(5);
        let k = Circle::new(0, 0, 0);
        let mut at_ideal = pl.pencil(Point::ideal(0), k).unwrap();
        at_ideal.sort();
        assert_eq!(at_ideal, (0..5).map(|c| Circle::new(0, 0, c)).collect::<Vec<_>>());
        let mut at_origin = pl.pencil(pt(0, 0), k).unwrap();
        at_origin.sort();
        assert_eq!(at_origin, (0..5).map(|m| Circle::new(m, 0, 0)).collect::<Vec<_>>());
        assert_eq!(pl.pencil(pt(1, 1), k), Err(PlaneError::NotOnCircle(pt(1, 1), k)));
    }

    #[test]
    fn pencil_closed_form_matches_scan() {
        for q in [2, 3, 5] {
            let pl = plane(q);
            for &k in pl.circles() {
                for p in pl.circle_points(k) {
                    let mut closed = pl.pencil(p, k).unwrap();
                    let mut scan = pl.pencil_by_scan(p, k).unwrap();
                    closed.sort();
                    scan.sort();
                    assert_eq!(closed, scan);
                    assert_eq!(closed.len(), q as usize);
                    for (i, &a) in closed.iter().enumerate() {
                        for &b in &closed[i + 1..] {
                            assert_eq!(pl.intersection(a, b).unwrap(), vec![p]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn joining_pencil_examples() {
        let pl = plane(5);
        let j = pl.joining_pencil(pt(0, 0), pt(1, 1)).unwrap();
        assert_eq!(j.len(), 5);
        assert!(j.iter().all(|&c| pl.incident(pt(0, 0), c) && pl.incident(pt(1, 1), c)));
        let mut k = pl.joining_pencil(Point::ideal(1), pt(0, 0)).unwrap();
        k.sort();
        assert_eq!(k, (0..5).map(|b| Circle::new(1, b, 0)).collect::<Vec<_>>());
        assert!(pl.joining_pencil(pt(2, 0), pt(2, 3)).is_err());
    }

    #[test]
    fn pencil_tangent_examples() {
        let pl = plane(5);
        let canon = Pencil::canonical();
        assert_eq!(
            pl.pencil_tangent(Circle::new(1, 3, 1), &canon),
            Ok((Circle::new(0, 0, 0), pt(1, 0)))
        );
        assert_eq!(
            pl.pencil_tangent(Circle::new(1, 0, 0), &canon),
            Ok((Circle::new(0, 0, 0), pt(0, 0)))
        );
        let pl2 = plane(2);
        match pl2.pencil_tangent(Circle::new(1, 0, 0), &canon) {
            Err(PlaneError::A3Failure { tangent_members, .. }) => assert_eq!(tangent_members.len(), 2),
            other => panic!("expected A3 failure, got {other:?}"),
        }
    }

    #[test]
    fn canonical_base_point_closed_form_matches_search() {
        for q in [3, 5, 7, 11] {
            let pl = plane(q);
            for &m in pl.circles().iter().filter(|c| !c.a.is_zero()) {
                assert_eq!(pl.canonical_base_point(m), pl.pencil_tangent(m, &Pencil::canonical()));
            }
        }
    }

    #[test]
    fn laguerre_axioms_hold() {
        for q in [2, 3, 5] {
            let r = plane(q).verify_axioms();
            assert!(r.is_pass(), "{r}");
        }
    }

    #[test]
    fn derived_affine_plane() {
        let pl = plane(5);
        let (aff, r) = pl.derived_affine(Point::ideal(0));
        assert!(r.is_pass(), "{r}");
        assert_eq!(aff.points.len(), 25);
        assert_eq!(aff.lines.len(), 30);
        assert_eq!(aff.order(), 5);
        let (_, r) = plane(3).derived_affine(pt(0, 0));
        assert!(r.is_pass(), "{r}");
        for &p in pl.points() {
            let (_, r) = pl.derived_affine(p);
            assert!(r.is_pass(), "{p}: {r}");
        }
    }

    #[test]
    fn point_json_encoding() {
        assert_eq!(serde_json::to_string(&pt(1, 2)).unwrap(), r#"{"t":"A","x":1,"y":2}"#);
        assert_eq!(serde_json::to_string(&Point::ideal(3)).unwrap(), r#"{"t":"I","a":3}"#);
        assert_eq!(serde_json::to_string(&Circle::new(1, 2, 3)).unwrap(), "[1,2,3]");
        assert_eq!(serde_json::to_string(&Generator::Ideal).unwrap(), r#"{"t":"I"}"#);
    }
}
