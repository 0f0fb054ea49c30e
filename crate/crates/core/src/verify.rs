//! The statement catalog: one exhaustive (or sampled) checker per id, the
//! tangent-circle equivalence `≡_L`, and tangency loci.
//!
//! Every checker works on the canonical pencil `⟨Ideal(0), (0,0,0)⟩` and
//! verifies the conclusion of a statement by brute force over the finite
//! plane. Closed forms appear only as cross-checks.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::autgroup::{DeltaGroup, GroupError, PencilAut};
use crate::bits::Bits;
use crate::field::{Fe, FieldError, SquareClass};
use crate::plane::{Circle, Pencil, Plane, PlaneError, Point};
use crate::report::{Report, Tally};
use crate::skewaffine::{Axiom, Budget, GroupSpace, LineKind, SpaceError};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Plane(#[from] PlaneError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("unknown check id {0:?}")]
    UnknownId(String),
    #[error("{0}")]
    BadInput(String),
}

macro_rules! catalog {
    ($($variant:ident => $id:literal, $summary:literal;)*) => {
        /// Catalog of checkable statements.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum CheckId {
            $($variant,)*
        }

        impl CheckId {
            pub const ALL: &'static [CheckId] = &[$(CheckId::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(CheckId::$variant => $id,)*
                }
            }

            /// One-line statement of what the checker asserts.
            pub fn summary(self) -> &'static str {
                match self {
                    $(CheckId::$variant => $summary,)*
                }
            }
        }
    };
}

catalog! {
    JoinShape => "P2.1", "joins of nonparallel points are circles of the pencil or tangent to one at the basepoint; parallel joins stay in a generator";
    PencilLinesStraight => "P2.2", "pencil circles give straight lines";
    ParallelSameIdeal => "P2.3", "parallel circle lines share their ideal point";
    BasePointJoin => "P2.4", "a circle missing p is the join of its tangency point with any other point";
    StraightIsPencil => "P2.5", "a circle line is straight only for pencil circles";
    SameIdealParallel => "P2.6", "circles missing p with a common ideal point give parallel lines";
    InvariantCircleTransitive => "C2.1", "the stabilizer of r is transitive on invariant circles through r";
    StabilizerStrains => "T3.1", "point stabilizers are transitive strain groups containing the symmetry";
    PencilTransitive => "P3.1", "translations fixing the pencil circles are transitive on them";
    SymmetryOnPencil => "C3.1", "two points of a pencil circle are swapped by a symmetry centered on it";
    FixpointFree => "L3.1", "fixpoint-free elements: census and restricted translation claim";
    GeneratorTransitive => "P3.2", "translations fixing all generators are transitive on each generator";
    Factorization => "T3.2", "translations form a transitive normal subgroup complementing every point stabilizer";
    Parallelogram => "C3.3", "the group space satisfies the parallelogram condition";
    TranslationParallel => "C3.4", "lines are parallel iff a translation maps one onto the other";
    NoTangentTriple => "P4.1", "circles tangent to a pencil circle at distinct points never meet only on the fixed generator";
    ParallelMeet => "C4.1", "parallel circle lines with basepoints on one straight line meet";
    DisjointParallel => "P4.2", "parallel circle lines are disjoint iff their basepoints are distinct and parallel";
    StraightTransfer => "P4.3", "a straight line meeting one of two parallel lines based on a straight line meets the other";
    TangentChain => "L4.1", "tangent circles at distinct points: meeting is passed along a chain";
    EquivalenceRelation => "P4.4", "tangent-circle equivalence is an equivalence relation";
    EquivalenceWitness => "P4.5", "equivalence is witnessed by one intersecting pair tangent at distinct points";
    SpecialLineClasses => "P4.6", "points of a special line are the equivalent points on its generator";
    TwoTangentCircles => "P4.7", "an ideal point and y are equivalent iff exactly two tangent circles pass through both";
    OppositeIdeal => "L4.2", "each ideal point q has exactly one partner q' under reversing joins";
    TangencyLocus => "T4.1", "base points of a two-point pencil sweep one circle";
    LocusThroughOpposite => "C4.2", "the tangency locus passes through the partner ideal point";
    TangencyConditions => "T4.2", "three tangent-circle conditions on a point pair are equivalent";
    SquareClassRule => "R4.1", "equivalence classes are the square classes of the height offset";
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckId {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CheckId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| VerifyError::UnknownId(s.to_string()))
    }
}

impl Serialize for CheckId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CheckId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

const TANGENT_READING: &str =
    "\"tangent to L\" includes every circle meeting L in exactly one point, so pencil circles touching L at p count";

/// Circles meeting a fixed circle `L` in exactly one point, with incidence
/// and intersection tables.
#[derive(Debug, Clone)]
struct Tangents {
    list: Vec<Circle>,
    touch: Vec<Point>,
    /// Per plane point index: tangent circles through it.
    through: Vec<Bits>,
    /// Per tangent circle: tangent circles meeting it (itself included).
    meets: Vec<Bits>,
    at: HashMap<Point, Bits>,
}

impl Tangents {
    fn new(plane: &Plane, l: Circle) -> Tangents {
        let list: Vec<Circle> = plane
            .circles()
            .iter()
            .copied()
            .filter(|&m| m != l && plane.meet_count(m, l) == 1)
            .collect();
        let n = list.len();
        let touch: Vec<Point> = list
            .iter()
            .map(|&m| plane.touching_point(m, l).expect("tangent circles touch"))
            .collect();
        let mut through = vec![Bits::new(n); plane.points().len()];
        for (i, &m) in list.iter().enumerate() {
            for p in plane.circle_points(m) {
                through[plane.point_index(p)].set(i);
            }
        }
        let mut meets = vec![Bits::new(n); n];
        for i in 0..n {
            for j in i..n {
                if plane.meets(list[i], list[j]) {
                    meets[i].set(j);
                    meets[j].set(i);
                }
            }
        }
        let mut at: HashMap<Point, Bits> = HashMap::new();
        for (i, &t) in touch.iter().enumerate() {
            at.entry(t).or_insert_with(|| Bits::new(n)).set(i);
        }
        Tangents {
            list,
            touch,
            through,
            meets,
            at,
        }
    }

    fn through(&self, plane: &Plane, p: Point) -> &Bits {
        &self.through[plane.point_index(p)]
    }

    /// Every tangent circle through `a` meets every one through `b`.
    fn all_meet(&self, ta: &Bits, tb: &Bits) -> bool {
        ta.iter().all(|i| tb.is_subset(&self.meets[i]))
    }

    /// Some tangent circle through `a` meets one through `b`, touching at
    /// a different point.
    fn some_meet_apart(&self, ta: &Bits, tb: &Bits) -> bool {
        ta.iter()
            .any(|i| !tb.and(&self.meets[i]).minus(&self.at[&self.touch[i]]).is_empty())
    }
}

/// `≡_L` computed from its definition over all tangent circles.
#[derive(Debug, Clone)]
struct Equivalence {
    circle: Circle,
    points: Vec<Point>,
    local: HashMap<Point, usize>,
    tangents: Tangents,
    rel: Vec<Bits>,
}

impl Equivalence {
    fn new(plane: &Plane, l: Circle) -> Equivalence {
        let points: Vec<Point> = plane
            .points()
            .iter()
            .copied()
            .filter(|&p| !plane.incident(p, l))
            .collect();
        let local = points.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let tangents = Tangents::new(plane, l);
        let n = points.len();
        let mut rel = vec![Bits::new(n); n];
        for (i, &a) in points.iter().enumerate() {
            let ta = tangents.through(plane, a);
            for (j, &b) in points.iter().enumerate() {
                if tangents.all_meet(ta, tangents.through(plane, b)) {
                    rel[i].set(j);
                }
            }
        }
        Equivalence {
            circle: l,
            points,
            local,
            tangents,
            rel,
        }
    }

    fn related(&self, a: Point, b: Point) -> bool {
        self.rel[self.local[&a]].get(self.local[&b])
    }

    /// Blocks of the relation, assuming it is an equivalence; ordered by
    /// least point.
    fn blocks(&self) -> Vec<Vec<Point>> {
        let mut seen = vec![false; self.points.len()];
        let mut out = Vec::new();
        for i in 0..self.points.len() {
            if seen[i] {
                continue;
            }
            let block: Vec<Point> = self.rel[i].iter().map(|j| self.points[j]).collect();
            for j in self.rel[i].iter() {
                seen[j] = true;
            }
            out.push(block);
        }
        out
    }
}

/// Square class of the height of `a` over a pencil circle `(0, 0, c)`;
/// ideal points use their own coordinate.
pub fn height_class(plane: &Plane, l: Circle, a: Point) -> Result<SquareClass, VerifyError> {
    let f = plane.field();
    let h = match a {
        Point::Affine { y, .. } => f.sub(y, l.c),
        Point::Ideal { a } => a,
    };
    Ok(f.square_class(h)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivBlock {
    pub class: SquareClass,
    pub points: Vec<Point>,
}

/// The classes of `≡_L` on the points off `L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivPartition {
    pub circle: Circle,
    pub blocks: Vec<EquivBlock>,
}

impl EquivPartition {
    pub fn block_of(&self, p: Point) -> Option<usize> {
        self.blocks.iter().position(|b| b.points.binary_search(&p).is_ok())
    }

    pub fn equivalent(&self, a: Point, b: Point) -> Option<bool> {
        Some(self.block_of(a)? == self.block_of(b)?)
    }
}

fn require_pencil_member(plane: &Plane, l: Circle) -> Result<(), VerifyError> {
    if plane.field().is_char2() {
        return Err(FieldError::Char2.into());
    }
    if !(l.a.is_zero() && l.b.is_zero()) {
        return Err(VerifyError::BadInput(format!("{l} is not in the canonical pencil")));
    }
    Ok(())
}

/// `≡_L` for a circle `L = (0, 0, c)` of the canonical pencil, with the
/// equivalence axioms, the single-witness characterization, the
/// two-circle count and the square-class rule checked.
pub fn thm_equiv_rel(plane: &Plane, l: Circle) -> Result<(EquivPartition, Report), VerifyError> {
    require_pencil_member(plane, l)?;
    let eq = Equivalence::new(plane, l);
    let mut tally = Tally::new("EQUIV", plane.q());
    let before = tally.violations();
    equivalence_axioms(&eq, &mut tally);
    tally.stat("equivalence_violations", tally.violations() - before);
    let before = tally.violations();
    equivalence_witness(plane, &eq, &mut tally);
    tally.stat("witness_violations", tally.violations() - before);
    let before = tally.violations();
    two_tangent_circles(plane, &eq, &mut tally);
    tally.stat("two_circle_violations", tally.violations() - before);
    let before = tally.violations();
    square_class_rule(plane, &eq, &mut tally)?;
    tally.stat("square_class_violations", tally.violations() - before);
    let mut blocks = Vec::new();
    for points in eq.blocks() {
        let class = height_class(plane, l, points[0])?;
        blocks.push(EquivBlock { class, points });
    }
    tally.stat("blocks", blocks.len());
    let partition = EquivPartition { circle: l, blocks };
    Ok((partition, tally.finish().with_note(TANGENT_READING)))
}

fn equivalence_axioms(eq: &Equivalence, t: &mut Tally) {
    let n = eq.points.len();
    for i in 0..n {
        t.check(
            eq.rel[i].get(i),
            || json!({"property": "reflexive", "a": eq.points[i], "L": eq.circle}),
        );
        for j in 0..n {
            t.check(
                eq.rel[i].get(j) == eq.rel[j].get(i),
                || json!({"property": "symmetric", "a": eq.points[i], "b": eq.points[j], "L": eq.circle}),
            );
            if eq.rel[i].get(j) {
                // a ≡ b and b ≡ c imply a ≡ c, for all c at once.
                t.check(
                    eq.rel[j].is_subset(&eq.rel[i]),
                    || json!({"property": "transitive", "a": eq.points[i], "b": eq.points[j], "L": eq.circle}),
                );
            }
        }
    }
}

fn equivalence_witness(plane: &Plane, eq: &Equivalence, t: &mut Tally) {
    for &a in &eq.points {
        let ta = eq.tangents.through(plane, a);
        for &b in &eq.points {
            let tb = eq.tangents.through(plane, b);
            t.check(
                eq.related(a, b) == eq.tangents.some_meet_apart(ta, tb),
                || json!({"a": a, "b": b, "L": eq.circle, "equivalent": eq.related(a, b)}),
            );
        }
    }
}

/// Ideal `x ≠ pL` against every `y` off `L`; ideal `y` share no circle with
/// `x`, so only affine `y` are quantified.
fn two_tangent_circles(plane: &Plane, eq: &Equivalence, t: &mut Tally) {
    let ideal_l = eq.circle.ideal_point();
    for &x in eq.points.iter().filter(|p| p.is_ideal() && **p != ideal_l) {
        let tx = eq.tangents.through(plane, x);
        for &y in eq.points.iter().filter(|p| !p.is_ideal()) {
            let common = tx.and(eq.tangents.through(plane, y)).count();
            t.check(eq.related(x, y) == (common == 2), || {
                json!({"x": x, "y": y, "L": eq.circle, "equivalent": eq.related(x, y), "common_tangent_circles": common})
            });
        }
    }
}

fn square_class_rule(plane: &Plane, eq: &Equivalence, t: &mut Tally) -> Result<(), VerifyError> {
    let classes: Vec<SquareClass> = eq
        .points
        .iter()
        .map(|&p| height_class(plane, eq.circle, p))
        .collect::<Result<_, _>>()?;
    for (i, &a) in eq.points.iter().enumerate() {
        for (j, &b) in eq.points.iter().enumerate() {
            let rule = classes[i] == classes[j];
            t.check(
                eq.rel[i].get(j) == rule,
                || json!({"a": a, "b": b, "L": eq.circle, "equivalent": eq.rel[i].get(j), "rule": rule}),
            );
        }
    }
    let blocks = eq.blocks().len();
    t.check(blocks == 2, || json!({"L": eq.circle, "blocks": blocks}));
    Ok(())
}

/// `(p, K, x)°`, or `K` itself when `x ∈ K`: the pencil circle through `x`.
fn pencil_circle_through(plane: &Plane, pencil: &Pencil, x: Point) -> Result<Circle, PlaneError> {
    if plane.incident(x, pencil.circle) {
        Ok(pencil.circle)
    } else {
        plane.touching_circle(pencil.point, pencil.circle, x)
    }
}

/// The points `q'` parallel to `p` such that `q ∈ (x, L_x, y)°` forces
/// `q' ∈ (y, L_y, x)°` for all admissible `x, y`, where `L_x` is the pencil
/// circle through `x`. Returns the candidates and the number of hypothesis
/// instances.
pub fn opposite_ideals(plane: &Plane, pencil: &Pencil, q_ideal: Point) -> Result<(Vec<Point>, u64), VerifyError> {
    let p = pencil.point;
    if !plane.parallel(p, q_ideal) || p == q_ideal {
        return Err(VerifyError::BadInput(format!(
            "{q_ideal} must be parallel to and distinct from {p}"
        )));
    }
    let xs: Vec<Point> = plane
        .points()
        .iter()
        .copied()
        .filter(|&x| !plane.parallel(x, p))
        .collect();
    let through: Vec<Circle> = xs
        .iter()
        .map(|&x| pencil_circle_through(plane, pencil, x))
        .collect::<Result<_, _>>()?;
    let mut candidates: BTreeSet<Point> = plane.generator_points(p.generator()).into_iter().collect();
    let mut instances = 0u64;
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in xs.iter().enumerate() {
            if plane.parallel(x, y) || plane.incident(y, through[i]) {
                continue;
            }
            if plane.incident(q_ideal, plane.touching_circle(x, through[i], y)?) {
                instances += 1;
                let back = plane.touching_circle(y, through[j], x)?;
                candidates.retain(|&c| plane.incident(c, back));
            }
        }
    }
    Ok((candidates.into_iter().collect(), instances))
}

/// Sweeps the base points of the circles of `⟨x, q⟩`, checks that they
/// fill the points of one circle off the fixed generator, and returns that
/// circle.
fn locus_into(
    plane: &Plane,
    pencil: &Pencil,
    q_ideal: Point,
    x: Point,
    t: &mut Tally,
) -> Result<Option<Circle>, VerifyError> {
    let p = pencil.point;
    let l = pencil_circle_through(plane, pencil, x)?;
    let m = plane.touching_circle(x, l, q_ideal)?;
    let mut bases: Vec<Point> = Vec::new();
    for n in plane.joining_pencil(x, q_ideal)? {
        let (_, base) = plane.pencil_tangent(n, pencil)?;
        if n == m {
            t.check(
                base == x,
                || json!({"q": q_ideal, "x": x, "circle": n, "base": base, "expected": x}),
            );
        }
        bases.push(base);
    }
    bases.sort();
    bases.dedup();
    let fitted = if bases.len() >= 3 {
        plane.circle_through(bases[0], bases[1], bases[2]).ok()
    } else {
        None
    };
    let locus = fitted.filter(|&c| {
        let mut off: Vec<Point> = plane
            .circle_points(c)
            .into_iter()
            .filter(|&z| !plane.parallel(z, p))
            .collect();
        off.sort();
        off == bases
    });
    t.check(locus.is_some(), || json!({"q": q_ideal, "x": x, "base_points": bases}));
    Ok(locus)
}

/// Tangency locus of `⟨x, q⟩` against the pencil, with the partner ideal
/// point of `q` recomputed by its defining sweep.
pub fn thm_tangency_locus(
    plane: &Plane,
    pencil: &Pencil,
    q_ideal: Point,
    x: Point,
) -> Result<(Circle, Report), VerifyError> {
    if plane.field().is_char2() {
        return Err(FieldError::Char2.into());
    }
    if plane.parallel(x, pencil.point) {
        return Err(VerifyError::BadInput(format!("{x} is parallel to {}", pencil.point)));
    }
    let (partners, instances) = opposite_ideals(plane, pencil, q_ideal)?;
    let mut t = Tally::new("T4.1", plane.q());
    let locus = locus_into(plane, pencil, q_ideal, x, &mut t)?;
    t.check(partners.len() == 1, || json!({"q": q_ideal, "partners": partners}));
    if let (Some(c), [partner]) = (locus, partners.as_slice()) {
        t.check(plane.incident(*partner, c), || json!({"locus": c, "partner": partner}));
    }
    t.stat("partner_instances", instances);
    if let Some(c) = locus {
        t.stat("locus", c.to_json());
    }
    let report = t.finish();
    let circle = locus.ok_or_else(|| VerifyError::BadInput(format!("no locus circle for {q_ideal}, {x}")))?;
    Ok((circle, report))
}

/// Permutation data for the derived affine plane at one point.
#[derive(Debug, Clone)]
struct AffineLines {
    points: Vec<usize>,
    lines: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl AffineLines {
    fn new(plane: &Plane, p: Point) -> AffineLines {
        let (derived, _) = plane.derived_affine(p);
        let lines: Vec<Vec<usize>> = derived
            .lines
            .iter()
            .map(|l| {
                let mut v: Vec<usize> = l.iter().map(|&x| plane.point_index(x)).collect();
                v.sort_unstable();
                v
            })
            .collect();
        let index = lines.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        let points = derived.points.iter().map(|&x| plane.point_index(x)).collect();
        AffineLines { points, lines, index }
    }

    /// The permutation induces a translation: lines go to equal or
    /// disjoint lines, and there are no fixed points unless it is the
    /// identity there.
    fn is_translation(&self, perm: &crate::autgroup::PermutationMap) -> bool {
        let fixed = self.points.iter().filter(|&&i| perm.fixes(i)).count();
        if fixed != 0 && fixed != self.points.len() {
            return false;
        }
        self.lines.iter().all(|l| {
            let mut image: Vec<usize> = l.iter().map(|&i| perm.apply_index(i)).collect();
            image.sort_unstable();
            self.index.contains_key(&image) && (image == *l || image.iter().all(|i| l.binary_search(i).is_err()))
        })
    }
}

/// Everything the checkers share for one `q`.
pub struct Suite {
    plane: Plane,
    pencil: Pencil,
    group: DeltaGroup,
    space: GroupSpace,
    members: Vec<Circle>,
    /// Group indices of the elements inducing translations of the derived
    /// plane at `p` (identity included).
    translations: Vec<usize>,
    /// Circles whose points off the fixed generator form a line.
    circle_lines: Vec<(Circle, usize)>,
    /// Pencil circle and base point of every circle missing `p`.
    bases: HashMap<Circle, (Circle, Point)>,
    equivalences: OnceLock<Vec<Equivalence>>,
}

impl Suite {
    pub fn new(q: u32) -> Result<Suite, VerifyError> {
        let plane = Plane::new(q)?;
        let group = DeltaGroup::canonical(&plane)?;
        let space = GroupSpace::build(&plane, &group)?;
        let pencil = Pencil::canonical();
        let members = plane.pencil_members(&pencil)?;
        let derived = AffineLines::new(&plane, pencil.point);
        let translations = (0..group.len())
            .filter(|&i| derived.is_translation(group.perm(i)))
            .collect();
        let mut circle_lines = Vec::new();
        let mut bases = HashMap::new();
        for &c in plane.circles() {
            let off: Vec<Point> = plane
                .circle_points(c)
                .into_iter()
                .filter(|&z| !group.on_fixed_generator(z))
                .collect();
            if let Some(id) = space.line_id_of(&off) {
                circle_lines.push((c, id));
            }
            if !plane.incident(pencil.point, c) {
                bases.insert(c, plane.pencil_tangent(c, &pencil)?);
            }
        }
        Ok(Suite {
            plane,
            pencil,
            group,
            space,
            members,
            translations,
            circle_lines,
            bases,
            equivalences: OnceLock::new(),
        })
    }

    pub fn q(&self) -> u32 {
        self.plane.q()
    }

    pub fn plane(&self) -> &Plane {
        &self.plane
    }

    pub fn group(&self) -> &DeltaGroup {
        &self.group
    }

    pub fn space(&self) -> &GroupSpace {
        &self.space
    }

    pub fn translations(&self) -> &[usize] {
        &self.translations
    }

    fn field(&self) -> &crate::field::FieldSpec {
        self.plane.field()
    }

    fn p(&self) -> Point {
        self.pencil.point
    }

    fn k(&self) -> Circle {
        self.pencil.circle
    }

    fn xs(&self) -> &[Point] {
        self.space.points()
    }

    fn off_generator(&self, c: Circle) -> Vec<Point> {
        let mut v: Vec<Point> = self
            .plane
            .circle_points(c)
            .into_iter()
            .filter(|&z| !self.group.on_fixed_generator(z))
            .collect();
        v.sort();
        v
    }

    fn equivalences(&self) -> &[Equivalence] {
        self.equivalences
            .get_or_init(|| self.members.iter().map(|&l| Equivalence::new(&self.plane, l)).collect())
    }

    fn equivalence_for(&self, l: Circle) -> &Equivalence {
        let i = self.members.iter().position(|&m| m == l).expect("pencil member");
        &self.equivalences()[i]
    }

    fn fixes_circle(&self, i: usize, c: Circle) -> bool {
        self.group.apply_circle(i, c) == c
    }

    fn index_of(&self, e: &PencilAut) -> usize {
        self.group.index_of(e).expect("closed under composition")
    }

    fn compose(&self, a: usize, b: usize) -> usize {
        let els = self.group.elements();
        self.index_of(&els[a].compose(self.field(), &els[b]))
    }

    fn is_closed(&self, subset: &[usize], t: &mut Tally, name: &str) {
        let set: HashSet<usize> = subset.iter().copied().collect();
        for &a in subset {
            for &b in subset {
                let c = self.compose(a, b);
                t.check(set.contains(&c), || {
                    let els = self.group.elements();
                    json!({"property": format!("{name} closed"), "a": els[a], "b": els[b]})
                });
            }
        }
    }

    fn orbit_of(&self, subset: &[usize], x: Point) -> Vec<Point> {
        self.group.orbit(&self.plane, subset, x)
    }

    /// Involutions fixing `r̄` pointwise and `K` setwise.
    fn symmetries_at(&self, r: Point) -> Vec<usize> {
        let gen: Vec<usize> = self
            .plane
            .generator_points(r.generator())
            .into_iter()
            .map(|z| self.plane.point_index(z))
            .collect();
        (0..self.group.len())
            .filter(|&i| {
                let perm = self.group.perm(i);
                !perm.is_identity()
                    && perm.compose(perm).is_identity()
                    && gen.iter().all(|&z| perm.fixes(z))
                    && self.fixes_circle(i, self.k())
            })
            .collect()
    }

    fn affine_fixed_points(&self, i: usize) -> Vec<Point> {
        let perm = self.group.perm(i);
        self.xs()
            .iter()
            .copied()
            .filter(|&x| perm.fixes(self.plane.point_index(x)))
            .collect()
    }

    pub fn check(&self, id: CheckId, budget: Budget) -> Report {
        let mut t = Tally::new(id.as_str(), self.q());
        let result = match id {
            CheckId::JoinShape => self.join_shape(&mut t),
            CheckId::PencilLinesStraight => self.pencil_lines_straight(&mut t),
            CheckId::ParallelSameIdeal => self.parallel_same_ideal(&mut t),
            CheckId::BasePointJoin => self.base_point_join(&mut t),
            CheckId::StraightIsPencil => self.straight_is_pencil(&mut t),
            CheckId::SameIdealParallel => self.same_ideal_parallel(&mut t),
            CheckId::InvariantCircleTransitive => self.invariant_circle_transitive(&mut t),
            CheckId::StabilizerStrains => self.stabilizer_strains(&mut t),
            CheckId::PencilTransitive => self.pencil_transitive(&mut t),
            CheckId::SymmetryOnPencil => self.symmetry_on_pencil(&mut t),
            CheckId::FixpointFree => return self.fixpoint_free(t),
            CheckId::GeneratorTransitive => self.generator_transitive(&mut t),
            CheckId::Factorization => self.factorization(&mut t),
            CheckId::Parallelogram => self.parallelogram(&mut t),
            CheckId::TranslationParallel => self.translation_parallel(&mut t),
            CheckId::NoTangentTriple => self.no_tangent_triple(&mut t),
            CheckId::ParallelMeet => self.parallel_meet(&mut t),
            CheckId::DisjointParallel => self.disjoint_parallel(&mut t),
            CheckId::StraightTransfer => self.straight_transfer(&mut t),
            CheckId::TangentChain => self.tangent_chain(&mut t),
            CheckId::EquivalenceRelation => self.per_member(&mut t, |_, eq, t| {
                equivalence_axioms(eq, t);
                Ok(())
            }),
            CheckId::EquivalenceWitness => self.per_member(&mut t, |s, eq, t| {
                equivalence_witness(&s.plane, eq, t);
                Ok(())
            }),
            CheckId::SpecialLineClasses => self.special_line_classes(&mut t),
            CheckId::TwoTangentCircles => self.per_member(&mut t, |s, eq, t| {
                two_tangent_circles(&s.plane, eq, t);
                Ok(())
            }),
            CheckId::OppositeIdeal => self.opposite_ideal(&mut t),
            CheckId::TangencyLocus => self.tangency_locus(&mut t),
            CheckId::LocusThroughOpposite => self.locus_through_opposite(&mut t),
            CheckId::TangencyConditions => self.tangency_conditions(&mut t, budget),
            CheckId::SquareClassRule => self.per_member(&mut t, |s, eq, t| square_class_rule(&s.plane, eq, t)),
        };
        let mode = match (id, budget) {
            (CheckId::TangencyConditions, Budget::Sample { cases, seed }) => format!("sample:{cases} seed:{seed}"),
            _ => "exhaustive".to_string(),
        };
        t.stat("mode", mode);
        match result {
            Ok(Some(note)) => t.finish().with_note(note),
            Ok(None) => t.finish(),
            Err(e) => Report::error(id.as_str(), self.q(), e),
        }
    }

    pub fn run(&self, ids: &[CheckId], budget: Budget) -> Vec<Report> {
        ids.iter().map(|&id| self.check(id, budget)).collect()
    }

    fn per_member(
        &self,
        t: &mut Tally,
        f: impl Fn(&Suite, &Equivalence, &mut Tally) -> Result<(), VerifyError>,
    ) -> Checked {
        for eq in self.equivalences() {
            f(self, eq, t)?;
        }
        Ok(Some(TANGENT_READING))
    }

    fn join_shape(&self, t: &mut Tally) -> Checked {
        for &r in self.xs() {
            for &x in self.xs().iter().filter(|&&x| x != r) {
                let line = self.space.join(r, x)?;
                if self.plane.parallel(r, x) {
                    t.check(
                        line.points.iter().all(|&z| self.plane.parallel(z, r)),
                        || json!({"r": r, "x": x, "line": line.points}),
                    );
                    continue;
                }
                let third = line.points.iter().copied().find(|&z| z != r && z != x);
                let circle = third.and_then(|z| self.plane.circle_through(r, x, z).ok());
                let ok = circle.is_some_and(|m| {
                    self.off_generator(m) == line.points
                        && (self.members.contains(&m)
                            || self
                                .members
                                .iter()
                                .any(|&l| l != m && self.plane.touching_point(m, l) == Some(r)))
                });
                t.check(ok, || json!({"r": r, "x": x, "line": line.points, "circle": circle}));
            }
        }
        Ok(None)
    }

    fn pencil_lines_straight(&self, t: &mut Tally) -> Checked {
        for &l in &self.members {
            let pts = self.off_generator(l);
            for &x in &pts {
                for &y in pts.iter().filter(|&&y| y != x) {
                    let line = self.space.join(x, y)?;
                    t.check(
                        line.points == pts,
                        || json!({"L": l, "x": x, "y": y, "join": line.points}),
                    );
                }
            }
        }
        Ok(None)
    }

    fn parallel_same_ideal(&self, t: &mut Tally) -> Checked {
        for &(m, lm) in &self.circle_lines {
            for &(n, ln) in &self.circle_lines {
                if self.space.parallel(lm, ln) {
                    t.check(m.ideal_point() == n.ideal_point(), || json!({"M": m, "N": n}));
                }
            }
        }
        Ok(None)
    }

    fn base_point_join(&self, t: &mut Tally) -> Checked {
        for (&m, &(_, x)) in sorted(&self.bases) {
            let pts = self.off_generator(m);
            for &y in pts.iter().filter(|&&y| y != x) {
                let line = self.space.join(x, y)?;
                t.check(
                    line.points == pts,
                    || json!({"M": m, "x": x, "y": y, "join": line.points}),
                );
            }
        }
        Ok(None)
    }

    fn straight_is_pencil(&self, t: &mut Tally) -> Checked {
        for &(m, id) in &self.circle_lines {
            let (_, bases) = self.space.classify_line(id);
            let straight = bases.len() == self.space.line(id).points.len();
            t.check(
                straight == self.members.contains(&m),
                || json!({"M": m, "straight": straight}),
            );
        }
        Ok(None)
    }

    fn same_ideal_parallel(&self, t: &mut Tally) -> Checked {
        let lines: HashMap<Circle, usize> = self.circle_lines.iter().copied().collect();
        let missing: Vec<Circle> = self
            .bases
            .keys()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        for &m in &missing {
            for &n in missing.iter().filter(|n| n.ideal_point() == m.ideal_point()) {
                let ok = match (lines.get(&m), lines.get(&n)) {
                    (Some(&a), Some(&b)) => self.space.parallel(a, b),
                    _ => false,
                };
                t.check(ok, || json!({"M": m, "N": n}));
            }
        }
        Ok(None)
    }

    fn invariant_circle_transitive(&self, t: &mut Tally) -> Checked {
        let mut missing_r = 0u64;
        for &r in self.xs() {
            let stab = self.group.stabilizer(&self.plane, r)?;
            for &m in self.plane.circles() {
                if !stab.iter().all(|&i| self.fixes_circle(i, m)) {
                    continue;
                }
                if !self.plane.incident(r, m) {
                    missing_r += 1;
                    continue;
                }
                let pts: Vec<Point> = self
                    .plane
                    .circle_points(m)
                    .into_iter()
                    .filter(|&z| z != r && z != self.plane.parallel_point(self.p(), m))
                    .collect();
                for &x in &pts {
                    let orbit = self.orbit_of(&stab, x);
                    for &y in &pts {
                        t.check(
                            orbit.binary_search(&y).is_ok(),
                            || json!({"r": r, "M": m, "x": x, "y": y}),
                        );
                    }
                }
            }
        }
        t.stat("invariant_circles_missing_r", missing_r);
        Ok(Some(
            "M ranges over stabilizer-invariant circles through r; for q = 3 some invariant circles miss r \
             and the two-element stabilizer cannot be transitive on them (counted in stats)",
        ))
    }

    fn stabilizer_strains(&self, t: &mut Tally) -> Checked {
        for &r in self.xs() {
            let stab = self.group.stabilizer(&self.plane, r)?;
            let l = pencil_circle_through(&self.plane, &self.pencil, r)?;
            for m in self.plane.pencil(r, l)? {
                for &i in &stab {
                    t.check(
                        self.fixes_circle(i, m),
                        || json!({"property": "fixes pencil", "r": r, "M": m, "element": self.group.elements()[i]}),
                    );
                }
                let pm = self.plane.parallel_point(self.p(), m);
                let pts: Vec<Point> = self
                    .plane
                    .circle_points(m)
                    .into_iter()
                    .filter(|&z| z != r && z != pm)
                    .collect();
                let orbit = self.orbit_of(&stab, pts[0]);
                t.check(
                    orbit == pts,
                    || json!({"property": "transitive", "r": r, "M": m, "orbit": orbit}),
                );
            }
            let sym = self.symmetries_at(r);
            let in_stab = sym.iter().filter(|i| stab.contains(i)).count();
            t.check(
                sym.len() == 1 && in_stab == 1,
                || json!({"property": "symmetry", "r": r, "symmetries": sym.len(), "in_stabilizer": in_stab}),
            );
        }
        Ok(None)
    }

    fn pencil_transitive(&self, t: &mut Tally) -> Checked {
        let tk: Vec<usize> = self
            .translations
            .iter()
            .copied()
            .filter(|&i| self.members.iter().all(|&l| self.fixes_circle(i, l)))
            .collect();
        self.is_closed(&tk, t, "T(p,K)");
        for &l in &self.members {
            let pts = self.off_generator(l);
            let orbit = self.orbit_of(&tk, pts[0]);
            t.check(orbit == pts, || json!({"L": l, "orbit": orbit}));
        }
        t.stat("group_order", tk.len());
        Ok(None)
    }

    fn symmetry_on_pencil(&self, t: &mut Tally) -> Checked {
        let mut sym: HashMap<Point, Option<usize>> = HashMap::new();
        for &r in self.xs() {
            let s = self.symmetries_at(r);
            sym.insert(r, (s.len() == 1).then(|| s[0]));
        }
        for &l in &self.members {
            let pts = self.off_generator(l);
            for &x in &pts {
                for &y in pts.iter().filter(|&&y| y != x) {
                    let ok = pts
                        .iter()
                        .any(|r| sym[r].is_some_and(|i| self.group.apply_point(i, x) == y));
                    t.check(ok, || json!({"R": l, "x": x, "y": y}));
                }
            }
        }
        Ok(None)
    }

    /// Report-only: the census of fixpoint-free elements and the restricted
    /// claims that do hold.
    fn fixpoint_free(&self, mut t: Tally) -> Report {
        let f = self.field();
        let minus_one = f.neg(Fe::ONE);
        let derived = AffineLines::new(&self.plane, self.p());
        let other_derived: Vec<AffineLines> = self
            .plane
            .generator_points(self.p().generator())
            .into_iter()
            .map(|p| AffineLines::new(&self.plane, p))
            .collect();
        let (mut k_one, mut glides, mut glides_translating) = (0u64, 0u64, 0u64);
        for i in 0..self.group.len() {
            let perm = self.group.perm(i);
            if perm.is_identity() || !self.affine_fixed_points(i).is_empty() {
                continue;
            }
            let e = self.group.elements()[i];
            t.check(
                e.k == Fe::ONE || e.k == minus_one,
                || json!({"property": "k = ±1", "element": e}),
            );
            if e.k == Fe::ONE {
                k_one += 1;
                t.check(
                    derived.is_translation(perm),
                    || json!({"property": "translation", "element": e}),
                );
            } else {
                glides += 1;
                if other_derived.iter().any(|d| d.is_translation(perm)) {
                    glides_translating += 1;
                }
            }
        }
        let q = self.q() as u64;
        t.check(
            k_one == q * q - 1,
            || json!({"property": "translation count", "found": k_one}),
        );
        t.check(
            glides == q * (q - 1),
            || json!({"property": "glide count", "found": glides}),
        );
        t.stat("translations", k_one);
        t.stat("glides", glides);
        t.stat("glides_translating_some_derived_plane", glides_translating);
        t.stat("mode", "exhaustive");
        t.finish_report_only().with_note(
            "fixpoint-free elements with k = -1 and g != 0 (glides) induce no translation of any derived plane \
             at a point of the fixed generator, so the claim is not asserted as stated; asserted instead: \
             fixpoint-free elements have k = ±1 and those with k = 1 are translations",
        )
    }

    fn generator_transitive(&self, t: &mut Tally) -> Checked {
        let tg: Vec<usize> = self
            .translations
            .iter()
            .copied()
            .filter(|&i| {
                self.xs()
                    .iter()
                    .all(|&x| self.plane.parallel(self.group.apply_point(i, x), x))
            })
            .collect();
        self.is_closed(&tg, t, "T(p,G)");
        for &x in self.xs() {
            let orbit = self.orbit_of(&tg, x);
            for &y in self.xs().iter().filter(|&&y| self.plane.parallel(x, y)) {
                t.check(orbit.binary_search(&y).is_ok(), || json!({"x": x, "y": y}));
            }
        }
        t.stat("group_order", tg.len());
        Ok(None)
    }

    fn factorization(&self, t: &mut Tally) -> Checked {
        let els = self.group.elements();
        let tr: HashSet<usize> = self.translations.iter().copied().collect();
        let through_p: Vec<Circle> = self
            .plane
            .circles()
            .iter()
            .copied()
            .filter(|&c| self.plane.incident(self.p(), c))
            .collect();
        let mut fixpoint_free_others = 0u64;
        for (i, perm) in self.group.perms().iter().enumerate() {
            if perm.is_identity() {
                continue;
            }
            let fixed = self.affine_fixed_points(i);
            if fixed.is_empty() {
                if !tr.contains(&i) {
                    fixpoint_free_others += 1;
                    continue;
                }
                let fixes_generators = self
                    .xs()
                    .iter()
                    .all(|&x| self.plane.parallel(self.group.apply_point(i, x), x));
                let directed = || {
                    through_p.iter().any(|&l| {
                        self.plane
                            .pencil(self.p(), l)
                            .is_ok_and(|pencil| pencil.iter().all(|&m| self.fixes_circle(i, m)))
                    })
                };
                t.check(
                    fixes_generators || directed(),
                    || json!({"property": "translation type", "element": els[i]}),
                );
            } else {
                let r = fixed[0];
                let l = pencil_circle_through(&self.plane, &self.pencil, r)?;
                let ok = self.plane.pencil(r, l)?.iter().all(|&m| self.fixes_circle(i, m));
                t.check(ok, || json!({"property": "strain", "element": els[i], "fixed": r}));
            }
        }
        t.stat("fixpoint_free_non_translations", fixpoint_free_others);

        let orbit = self.orbit_of(&self.translations, self.xs()[0]);
        t.check(
            orbit == self.xs(),
            || json!({"property": "transitive", "orbit_size": orbit.len()}),
        );
        for g in 0..self.group.len() {
            let inv = self.index_of(&els[g].inverse(self.field()));
            for &tau in &self.translations {
                let conj = self.compose(self.compose(g, tau), inv);
                t.check(
                    tr.contains(&conj),
                    || json!({"property": "normal", "g": els[g], "t": els[tau]}),
                );
            }
        }
        for &r in self.xs() {
            let stab = self.group.stabilizer(&self.plane, r)?;
            let mut hit = vec![false; self.group.len()];
            let mut ok = self.translations.len() * stab.len() == self.group.len();
            for &tau in &self.translations {
                for &s in &stab {
                    let c = self.compose(tau, s);
                    ok &= !std::mem::replace(&mut hit[c], true);
                }
            }
            t.check(
                ok && hit.iter().all(|&h| h),
                || json!({"property": "factorization", "r": r}),
            );
        }
        t.stat("translations", self.translations.len());
        Ok(Some(
            "fixpoint-free elements that are not translations (glides) are counted in stats rather than failed; \
             the remaining fixpoint-free elements must fix all generators or all circles of a pencil at p",
        ))
    }

    fn parallelogram(&self, t: &mut Tally) -> Checked {
        let r = self.space.check_axiom(Axiom::Pgm, Budget::Exhaustive);
        t.add_cases(r.cases_checked);
        for w in r.witnesses {
            t.fail(w);
        }
        for &a in &self.translations {
            for &b in &self.translations {
                t.check(self.compose(a, b) == self.compose(b, a), || {
                    let els = self.group.elements();
                    json!({"property": "commutative", "a": els[a], "b": els[b]})
                });
            }
        }
        let orbit = self.orbit_of(&self.translations, self.xs()[0]);
        t.check(orbit == self.xs(), || json!({"property": "transitive"}));
        Ok(None)
    }

    fn translation_parallel(&self, t: &mut Tally) -> Checked {
        let n = self.space.lines().len();
        for a in 0..n {
            let mut reach = vec![false; n];
            for &g in &self.translations {
                reach[self.space.map_line(g, a)] = true;
            }
            for (b, &r) in reach.iter().enumerate() {
                t.check(
                    r == self.space.parallel(a, b),
                    || json!({"A": a, "B": b, "translation": r}),
                );
            }
        }
        Ok(None)
    }

    fn no_tangent_triple(&self, t: &mut Tally) -> Checked {
        for &l in &self.members {
            let pts = self.off_generator(l);
            let tangent_at: Vec<Vec<Circle>> = pts
                .iter()
                .map(|&x| {
                    self.plane
                        .pencil(x, l)
                        .map(|v| v.into_iter().filter(|&m| m != l).collect())
                })
                .collect::<Result<_, _>>()?;
            for (i, ms) in tangent_at.iter().enumerate() {
                for (j, ns) in tangent_at.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    for &m in ms {
                        for &n in ns {
                            let common = self.plane.intersection(m, n)?;
                            let bad = !common.is_empty() && common.iter().all(|&z| self.group.on_fixed_generator(z));
                            t.check(!bad, || json!({"L": l, "M": m, "N": n, "common": common}));
                        }
                    }
                }
            }
        }
        Ok(Some(
            "M and N touch L at distinct points off the fixed generator; a violation is a nonempty M ∩ N inside it",
        ))
    }

    fn line_of(&self, c: Circle) -> Option<usize> {
        self.circle_lines.iter().find(|(m, _)| *m == c).map(|&(_, id)| id)
    }

    fn parallel_meet(&self, t: &mut Tally) -> Checked {
        for &l in &self.members {
            let on_l: Vec<(Circle, usize)> = sorted(&self.bases)
                .filter(|(_, (member, _))| *member == l)
                .filter_map(|(&m, _)| self.line_of(m).map(|id| (m, id)))
                .collect();
            for &(m, a) in &on_l {
                for &(n, b) in &on_l {
                    if !self.space.parallel(a, b) {
                        continue;
                    }
                    let meet = self
                        .space
                        .line(a)
                        .points
                        .iter()
                        .any(|&z| self.space.line(b).contains(z));
                    t.check(meet, || json!({"B": l, "M": m, "N": n}));
                }
            }
        }
        Ok(None)
    }

    fn disjoint_parallel(&self, t: &mut Tally) -> Checked {
        let proper: Vec<(Circle, usize, Point)> = sorted(&self.bases)
            .filter_map(|(&m, &(_, base))| self.line_of(m).map(|id| (m, id, base)))
            .collect();
        for &(m, a, bm) in &proper {
            for &(n, b, bn) in &proper {
                if m == n || !self.space.parallel(a, b) {
                    continue;
                }
                let disjoint = !self
                    .space
                    .line(a)
                    .points
                    .iter()
                    .any(|&z| self.space.line(b).contains(z));
                let rule = bm != bn && self.plane.parallel(bm, bn);
                t.check(disjoint == rule, || json!({"M": m, "N": n, "disjoint": disjoint}));
            }
        }
        Ok(None)
    }

    fn straight_transfer(&self, t: &mut Tally) -> Checked {
        let lines = self.space.lines();
        let straight: Vec<usize> = (0..lines.len())
            .filter(|&i| lines[i].kind == LineKind::StraightPencil)
            .collect();
        let mut groups: HashMap<(usize, Circle), Vec<usize>> = HashMap::new();
        for (id, line) in lines.iter().enumerate() {
            if line.kind == LineKind::StraightPencil {
                continue;
            }
            let b = pencil_circle_through(&self.plane, &self.pencil, line.basepoints[0])?;
            groups.entry((line.class_id, b)).or_default().push(id);
        }
        let meets = |a: usize, b: usize| lines[a].points.iter().any(|&z| lines[b].contains(z));
        for key in groups.keys().collect::<BTreeSet<_>>() {
            let group = &groups[key];
            for &a in group {
                for &a2 in group {
                    for &c in &straight {
                        if meets(c, a) {
                            t.check(meets(c, a2), || json!({"A": a, "A'": a2, "C": c}));
                        }
                    }
                }
            }
        }
        Ok(None)
    }

    fn tangent_chain(&self, t: &mut Tally) -> Checked {
        for &l in &self.members {
            let tg = Tangents::new(&self.plane, l);
            for qi in 0..tg.list.len() {
                let nq = tg.meets[qi].minus(&tg.at[&tg.touch[qi]]);
                for pi in nq.iter() {
                    let rs = nq.minus(&tg.at[&tg.touch[pi]]);
                    t.add_cases(rs.count() as u64);
                    let bad = rs.minus(&tg.meets[pi]);
                    for ri in bad.iter() {
                        t.fail(json!({"L": l, "P": tg.list[pi], "Q": tg.list[qi], "R": tg.list[ri]}));
                    }
                }
            }
        }
        Ok(Some(TANGENT_READING))
    }

    fn special_line_classes(&self, t: &mut Tally) -> Checked {
        for &x in self.xs() {
            let l = pencil_circle_through(&self.plane, &self.pencil, x)?;
            let eq = self.equivalence_for(l);
            let gen: Vec<Point> = self
                .xs()
                .iter()
                .copied()
                .filter(|&z| self.plane.parallel(z, x) && z != x)
                .collect();
            for &y in &gen {
                let line = self.space.join(x, y)?;
                for &z in &gen {
                    t.check(
                        line.contains(z) == eq.related(z, y),
                        || json!({"x": x, "y": y, "z": z, "on_line": line.contains(z)}),
                    );
                }
            }
        }
        Ok(Some(TANGENT_READING))
    }

    fn opposite_ideal(&self, t: &mut Tally) -> Checked {
        let f = self.field();
        for beta in f.nonzero() {
            let q_ideal = Point::Ideal { a: beta };
            let (partners, instances) = opposite_ideals(&self.plane, &self.pencil, q_ideal)?;
            t.add_cases(instances);
            let expected = Point::Ideal { a: f.neg(beta) };
            t.check(partners == [expected], || json!({"q": q_ideal, "partners": partners}));
        }
        Ok(Some(
            "for x, y nonparallel and off the fixed generator with y off the pencil circle through x, \
             q on the circle touching L_x at x through y forces q' on the circle touching L_y at y through x",
        ))
    }

    fn tangency_locus(&self, t: &mut Tally) -> Checked {
        let f = self.field();
        for beta in f.nonzero() {
            let q_ideal = Point::Ideal { a: beta };
            for &x in self.xs() {
                let Some(c) = locus_into(&self.plane, &self.pencil, q_ideal, x, t)? else {
                    continue;
                };
                let Point::Affine { x: u, y: v } = x else {
                    unreachable!("canonical space is affine")
                };
                let closed = Circle {
                    a: f.neg(beta),
                    b: f.mul(f.add(beta, beta), u),
                    c: f.sub(v, f.mul(beta, f.square(u))),
                };
                t.check(
                    c == closed,
                    || json!({"q": q_ideal, "x": x, "locus": c, "closed_form": closed}),
                );
            }
        }
        Ok(None)
    }

    fn locus_through_opposite(&self, t: &mut Tally) -> Checked {
        for beta in self.field().nonzero() {
            let q_ideal = Point::Ideal { a: beta };
            let (partners, _) = opposite_ideals(&self.plane, &self.pencil, q_ideal)?;
            if !t.check(partners.len() == 1, || json!({"q": q_ideal, "partners": partners})) {
                continue;
            }
            for &x in self.xs() {
                let mut scratch = Tally::new("", self.q());
                let locus = locus_into(&self.plane, &self.pencil, q_ideal, x, &mut scratch)?;
                t.check(
                    locus.is_some_and(|c| self.plane.incident(partners[0], c)),
                    || json!({"q": q_ideal, "x": x, "locus": locus, "partner": partners[0]}),
                );
            }
        }
        Ok(None)
    }

    fn tangency_conditions(&self, t: &mut Tally, budget: Budget) -> Checked {
        let plane = &self.plane;
        let mut holding = 0u64;
        let mut one = |tg: &Tangents, l: Circle, x: Point, y: Point, t: &mut Tally| {
            let (tx, ty) = (tg.through(plane, x), tg.through(plane, y));
            let c1 = tx.and(ty).count() == 2;
            let c2 = tg.all_meet(tx, ty);
            let c3 = tg.some_meet_apart(tx, ty);
            holding += c1 as u64;
            t.check(
                c1 == c2 && c2 == c3,
                || json!({"L": l, "x": x, "y": y, "conditions": [c1, c2, c3]}),
            );
        };
        match budget {
            Budget::Exhaustive => {
                for &l in plane.circles() {
                    let tg = Tangents::new(plane, l);
                    let off: Vec<Point> = plane
                        .points()
                        .iter()
                        .copied()
                        .filter(|&z| !plane.incident(z, l))
                        .collect();
                    for &x in &off {
                        for &y in off.iter().filter(|&&y| !plane.parallel(x, y)) {
                            one(&tg, l, x, y, t);
                        }
                    }
                }
            }
            Budget::Sample { cases, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let circles = plane.circles();
                let points = plane.points();
                let mut cache: HashMap<Circle, Tangents> = HashMap::new();
                let mut drawn = 0;
                while drawn < cases {
                    let l = circles[rng.random_range(0..circles.len())];
                    let x = points[rng.random_range(0..points.len())];
                    let y = points[rng.random_range(0..points.len())];
                    if plane.incident(x, l) || plane.incident(y, l) || plane.parallel(x, y) {
                        continue;
                    }
                    let tg = cache.entry(l).or_insert_with(|| Tangents::new(plane, l));
                    one(tg, l, x, y, t);
                    drawn += 1;
                }
            }
        }
        t.stat("pairs_with_two_circles", holding);
        Ok(Some(TANGENT_READING))
    }
}

type Checked = Result<Option<&'static str>, VerifyError>;

fn sorted<K: Ord, V>(m: &HashMap<K, V>) -> impl Iterator<Item = (&K, &V)> {
    let mut v: Vec<(&K, &V)> = m.iter().collect();
    v.sort_by(|a, b| a.0.cmp(b.0));
    v.into_iter()
}

/// Runs one check at one `q`.
pub fn thm_check(id: CheckId, q: u32, budget: Budget) -> Result<Report, VerifyError> {
    Ok(Suite::new(q)?.check(id, budget))
}

/// Runs the whole catalog at one `q`, in catalog order.
pub fn run_all(q: u32, budget: Budget) -> Result<Vec<Report>, VerifyError> {
    Ok(Suite::new(q)?.run(CheckId::ALL, budget))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Status;

    #[test]
    fn catalog_round_trips() {
        assert_eq!(CheckId::ALL.len(), 29);
        for &id in CheckId::ALL {
            assert_eq!(id.as_str().parse::<CheckId>().unwrap(), id);
            let s = serde_json::to_string(&id).unwrap();
            assert_eq!(serde_json::from_str::<CheckId>(&s).unwrap(), id);
        }
        assert!("P9.9".parse::<CheckId>().is_err());
    }

    #[test]
    fn equivalence_examples() {
        let plane = Plane::new(5).unwrap();
        let (part, report) = thm_equiv_rel(&plane, Circle::new(0, 0, 0)).unwrap();
        assert!(report.is_pass(), "{report}");
        assert_eq!(part.blocks.len(), 2);
        assert_eq!(part.equivalent(Point::affine(0, 1), Point::affine(3, 4)), Some(true));
        assert_eq!(part.equivalent(Point::affine(0, 1), Point::affine(0, 2)), Some(false));
        assert_eq!(part.equivalent(Point::ideal(1), Point::affine(2, 4)), Some(true));
        let tg = Tangents::new(&plane, Circle::new(0, 0, 0));
        let common = tg
            .through(&plane, Point::ideal(1))
            .and(tg.through(&plane, Point::affine(2, 4)));
        let circles: Vec<Circle> = common.iter().map(|i| tg.list[i]).collect();
        assert_eq!(circles, vec![Circle::new(1, 0, 0), Circle::new(1, 2, 1)]);
        assert!(thm_equiv_rel(&plane, Circle::new(1, 0, 0)).is_err());
    }

    #[test]
    fn tangency_locus_examples() {
        let plane = Plane::new(5).unwrap();
        let pencil = Pencil::canonical();
        let (c, r) = thm_tangency_locus(&plane, &pencil, Point::ideal(1), Point::affine(0, 0)).unwrap();
        assert!(r.is_pass(), "{r}");
        assert_eq!(c, Circle::new(4, 0, 0));
        let (c, _) = thm_tangency_locus(&plane, &pencil, Point::ideal(2), Point::affine(1, 1)).unwrap();
        assert_eq!(c.ideal_point(), Point::ideal(3));
        let plane7 = Plane::new(7).unwrap();
        let (c, _) = thm_tangency_locus(&plane7, &pencil, Point::ideal(1), Point::affine(0, 0)).unwrap();
        assert_eq!(c, Circle::new(6, 0, 0));
        assert!(thm_tangency_locus(&plane, &pencil, Point::ideal(0), Point::affine(0, 0)).is_err());
    }

    #[test]
    fn opposite_ideal_for_shifted_pencil() {
        let plane = Plane::new(5).unwrap();
        let pencil = Pencil {
            point: Point::ideal(2),
            circle: Circle::new(2, 1, 3),
        };
        let (partners, n) = opposite_ideals(&plane, &pencil, Point::ideal(3)).unwrap();
        assert!(n > 0);
        assert_eq!(partners, vec![Point::ideal(1)]);
    }

    #[test]
    fn catalog_examples_q5() {
        let suite = Suite::new(5).unwrap();
        let r = suite.check(CheckId::StraightIsPencil, Budget::Exhaustive);
        assert!(r.is_pass());
        assert_eq!(r.cases_checked, 105);
        let r = suite.check(CheckId::FixpointFree, Budget::Exhaustive);
        assert_eq!(r.status, Status::ReportOnly);
        assert_eq!(r.stat_u64("translations"), Some(24));
        assert_eq!(r.stat_u64("glides"), Some(20));
        assert_eq!(r.stat_u64("glides_translating_some_derived_plane"), Some(0));
        assert!(suite.check(CheckId::TangencyConditions, Budget::Exhaustive).is_pass());
    }

    #[test]
    fn whole_catalog_q3() {
        for r in run_all(3, Budget::Exhaustive).unwrap() {
            assert!(r.status.is_ok(), "{r}");
        }
    }

    #[test]
    fn sampled_tangency_conditions_are_deterministic() {
        let suite = Suite::new(5).unwrap();
        let b = Budget::Sample { cases: 500, seed: 3 };
        let r1 = suite.check(CheckId::TangencyConditions, b);
        let r2 = suite.check(CheckId::TangencyConditions, b);
        assert_eq!(r1, r2);
        assert_eq!(r1.cases_checked, 500);
    }

    #[test]
    fn char2_is_rejected() {
        assert!(Suite::new(2).is_err());
        let plane = Plane::new(2).unwrap();
        assert!(thm_equiv_rel(&plane, Circle::new(0, 0, 0)).is_err());
    }
}
