//! The group space V(G) of Δ(p,K) acting on the points off the fixed
//! generator.
//!
//! Lines are `x ⊔ y = {x} ∪ G_x·y`; two lines are parallel when some group
//! element maps one onto the other. A line is a sorted point set with all
//! the basepoints that produce it. Special lines are also keyed by their
//! basepoint: for q = 3 they have two points, and `x ⊔ y`, `y ⊔ x` are
//! distinct lines on the same set.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::autgroup::{verify_a1, verify_a2, DeltaGroup, GroupError};
use crate::bits::Bits;
use crate::field::{Fe, SquareClass};
use crate::plane::{Circle, Plane, Point};
use crate::report::{Report, Tally};

/// Number of sampled cases used when a sweep is too large to enumerate.
pub const DEFAULT_SAMPLES: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("group fails {}", .0.iter().filter(|r| !r.is_pass()).map(|r| r.check_id.as_str()).collect::<Vec<_>>().join(", "))]
    Axioms(Vec<Report>),
    #[error("join of a point with itself: {0}")]
    SamePoint(Point),
    #[error("{0} is not a point of the group space")]
    NotInSpace(Point),
    #[error("closed forms need the canonical pencil")]
    NotCanonical,
    #[error("unknown axiom {0:?}")]
    UnknownAxiom(String),
    #[error("bad budget {0:?}; expected `exhaustive` or `sample:K`")]
    BadBudget(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    CircleLine,
    StraightPencil,
    Special,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Line {
    pub points: Vec<Point>,
    pub basepoints: Vec<Point>,
    pub kind: LineKind,
    /// Id of the least line in the parallel class.
    pub class_id: usize,
    /// The circle whose affine part this is; `None` for special lines.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circle: Option<Circle>,
}

impl Line {
    pub fn is_straight(&self) -> bool {
        self.basepoints.len() == self.points.len()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.points.binary_search(&p).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axiom {
    L1,
    L2,
    P1,
    P2,
    T,
    V,
    Pgm,
    Des,
    Pap,
}

impl Axiom {
    pub const ALL: [Axiom; 9] = [
        Axiom::L1,
        Axiom::L2,
        Axiom::P1,
        Axiom::P2,
        Axiom::T,
        Axiom::V,
        Axiom::Pgm,
        Axiom::Des,
        Axiom::Pap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Axiom::L1 => "L1",
            Axiom::L2 => "L2",
            Axiom::P1 => "P1",
            Axiom::P2 => "P2",
            Axiom::T => "T",
            Axiom::V => "V",
            Axiom::Pgm => "Pgm",
            Axiom::Des => "Des",
            Axiom::Pap => "Pap",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axiom {
    type Err = SpaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axiom::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SpaceError::UnknownAxiom(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Budget {
    Exhaustive,
    Sample { cases: u64, seed: u64 },
}

impl Budget {
    /// Exhaustive up to q = 5; beyond that the five-point sweeps (T, Des,
    /// Pap) are sampled with seed 0.
    pub fn default_for(axiom: Axiom, q: u32) -> Budget {
        match axiom {
            Axiom::T | Axiom::Des | Axiom::Pap if q > 5 => Budget::Sample {
                cases: DEFAULT_SAMPLES,
                seed: 0,
            },
            _ => Budget::Exhaustive,
        }
    }

    /// Parses `exhaustive` or `sample:K`.
    pub fn parse(s: &str, seed: u64) -> Result<Budget, SpaceError> {
        if s == "exhaustive" {
            return Ok(Budget::Exhaustive);
        }
        s.strip_prefix("sample:")
            .and_then(|k| k.replace('_', "").parse::<f64>().ok())
            .filter(|&k| k >= 1.0 && k.fract() == 0.0)
            .map(|k| Budget::Sample { cases: k as u64, seed })
            .ok_or_else(|| SpaceError::BadBudget(s.to_string()))
    }
}

#[derive(Debug, Serialize)]
pub struct SpaceExport {
    pub q: u32,
    pub lines: Vec<LineExport>,
}

#[derive(Debug, Serialize)]
pub struct LineExport {
    pub base: Vec<Point>,
    pub kind: LineKind,
    pub class: usize,
    pub points: Vec<Point>,
}

/// `V(Δ(p,K))`, immutable after [`GroupSpace::build`].
#[derive(Debug, Clone)]
pub struct GroupSpace {
    q: u32,
    canonical: bool,
    points: Vec<Point>,
    local: HashMap<Point, usize>,
    /// `join[x * n + y]`, line id; `u32::MAX` on the diagonal.
    join: Vec<u32>,
    lines: Vec<Line>,
    line_bits: Vec<Bits>,
    line_index: HashMap<LineKey, usize>,
    /// Dense class number per line; class ids are kept on [`Line`].
    class_of: Vec<usize>,
    class_ids: Vec<usize>,
    /// `mask[a * classes + c]`: points `z ≠ a` with `a ⊔ z` in class `c`.
    mask: Vec<Bits>,
    /// Group elements restricted to the space, as local permutations.
    perms: Vec<Vec<u32>>,
    /// Indices into `perms` of the elements with `k = 1`.
    translations: Vec<usize>,
}

impl GroupSpace {
    /// Builds the space after checking A1 and A2 for `group`.
    pub fn build(plane: &Plane, group: &DeltaGroup) -> Result<GroupSpace, SpaceError> {
        let reports = vec![verify_a1(plane, group), verify_a2(plane, group)];
        if reports.iter().any(|r| !r.is_pass()) {
            return Err(SpaceError::Axioms(reports));
        }
        let points: Vec<Point> = plane
            .points()
            .iter()
            .copied()
            .filter(|&p| !group.on_fixed_generator(p))
            .collect();
        let n = points.len();
        let local: HashMap<Point, usize> = points.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let perms: Vec<Vec<u32>> = group
            .perms()
            .iter()
            .map(|perm| points.iter().map(|&p| local[&perm.apply(plane, p)] as u32).collect())
            .collect();
        let translations: Vec<usize> = group
            .elements()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.k == Fe::ONE)
            .map(|(i, _)| i)
            .collect();

        // Joins, collected as raw keys first.
        let special = |set: &[u32]| {
            set.iter()
                .all(|&i| points[i as usize].generator() == points[set[0] as usize].generator())
        };
        let mut raw_index: HashMap<LineKey, usize> = HashMap::new();
        let mut raw_lines: Vec<LineKey> = Vec::new();
        let mut raw_bases: Vec<Vec<u32>> = Vec::new();
        let mut join = vec![u32::MAX; n * n];
        for x in 0..n {
            let stab: Vec<&Vec<u32>> = perms.iter().filter(|p| p[x] as usize == x).collect();
            for y in 0..n {
                if y == x || join[x * n + y] != u32::MAX {
                    continue;
                }
                let mut set: Vec<u32> = stab.iter().map(|p| p[y]).collect();
                set.push(x as u32);
                set.sort_unstable();
                set.dedup();
                let anchor = if special(&set) { x as u32 } else { NO_ANCHOR };
                let key = (set.clone(), anchor);
                let id = *raw_index.entry(key.clone()).or_insert_with(|| {
                    raw_lines.push(key);
                    raw_bases.push(Vec::new());
                    raw_lines.len() - 1
                });
                raw_bases[id].push(x as u32);
                for &z in &set {
                    if z as usize != x {
                        join[x * n + z as usize] = id as u32;
                    }
                }
            }
        }

        // Renumber lines in lexicographic order of their point sets.
        let mut order: Vec<usize> = (0..raw_lines.len()).collect();
        order.sort_by(|&a, &b| raw_lines[a].cmp(&raw_lines[b]));
        let mut renumber = vec![0u32; raw_lines.len()];
        for (new, &old) in order.iter().enumerate() {
            renumber[old] = new as u32;
        }
        for j in join.iter_mut().filter(|j| **j != u32::MAX) {
            *j = renumber[*j as usize];
        }
        let mut lines = Vec::with_capacity(order.len());
        let mut line_bits = Vec::with_capacity(order.len());
        let mut line_index = HashMap::with_capacity(order.len());
        for (new, &old) in order.iter().enumerate() {
            let key = &raw_lines[old];
            let set = &key.0;
            let mut bases = raw_bases[old].clone();
            bases.sort_unstable();
            let pts: Vec<Point> = set.iter().map(|&i| points[i as usize]).collect();
            let kind = if pts.iter().all(|&p| plane.parallel(p, pts[0])) {
                LineKind::Special
            } else if bases.len() == set.len() {
                LineKind::StraightPencil
            } else {
                LineKind::CircleLine
            };
            let circle = (kind != LineKind::Special).then(|| fit_circle(plane, &pts)).flatten();
            let mut bits = Bits::new(n);
            set.iter().for_each(|&i| bits.set(i as usize));
            line_bits.push(bits);
            line_index.insert(key.clone(), new);
            lines.push(Line {
                points: pts,
                basepoints: bases.iter().map(|&i| points[i as usize]).collect(),
                kind,
                class_id: usize::MAX,
                circle,
            });
        }

        // Parallel classes as orbits of the group on lines.
        let mut class_of = vec![usize::MAX; lines.len()];
        let mut class_ids = Vec::new();
        for id in 0..lines.len() {
            if class_of[id] != usize::MAX {
                continue;
            }
            let class = class_ids.len();
            class_ids.push(id);
            let (set, anchor) = &raw_lines[order[id]];
            for perm in &perms {
                let target = line_index[&image_key(perm, set, *anchor)];
                class_of[target] = class;
            }
        }
        for (id, line) in lines.iter_mut().enumerate() {
            line.class_id = class_ids[class_of[id]];
        }

        let classes = class_ids.len();
        let mut mask = vec![Bits::new(n); n * classes];
        for a in 0..n {
            for z in 0..n {
                if a != z {
                    let c = class_of[join[a * n + z] as usize];
                    mask[a * classes + c].set(z);
                }
            }
        }

        Ok(GroupSpace {
            q: plane.q(),
            canonical: group.pencil().is_canonical(),
            points,
            local,
            join,
            lines,
            line_bits,
            line_index,
            class_of,
            class_ids,
            mask,
            perms,
            translations,
        })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn line(&self, id: usize) -> &Line {
        &self.lines[id]
    }

    pub fn class_count(&self) -> usize {
        self.class_ids.len()
    }

    /// Lines grouped by parallel class, classes ordered by their least line.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.class_ids.len()];
        for (id, &c) in self.class_of.iter().enumerate() {
            out[c].push(id);
        }
        out
    }

    pub fn kind_census(&self) -> HashMap<LineKind, usize> {
        let mut m = HashMap::new();
        for l in &self.lines {
            *m.entry(l.kind).or_default() += 1;
        }
        m
    }

    fn index(&self, p: Point) -> Result<usize, SpaceError> {
        self.local.get(&p).copied().ok_or(SpaceError::NotInSpace(p))
    }

    /// Line id of `x ⊔ y`.
    pub fn join_id(&self, x: Point, y: Point) -> Result<usize, SpaceError> {
        if x == y {
            return Err(SpaceError::SamePoint(x));
        }
        let n = self.points.len();
        Ok(self.join[self.index(x)? * n + self.index(y)?] as usize)
    }

    pub fn join(&self, x: Point, y: Point) -> Result<&Line, SpaceError> {
        Ok(&self.lines[self.join_id(x, y)?])
    }

    /// Line id of a point set, if it is a line. A point set can carry two
    /// special lines when q = 3; the one based at the least point is
    /// returned.
    pub fn line_id_of(&self, points: &[Point]) -> Option<usize> {
        let mut set: Vec<u32> = points
            .iter()
            .map(|p| self.local.get(p).map(|&i| i as u32))
            .collect::<Option<_>>()?;
        set.sort_unstable();
        set.dedup();
        if let Some(&id) = self.line_index.get(&(set.clone(), NO_ANCHOR)) {
            return Some(id);
        }
        set.iter()
            .find_map(|&a| self.line_index.get(&(set.clone(), a)).copied())
    }

    /// Line id of the line with point set `points` based at `base`.
    pub fn line_id_at(&self, points: &[Point], base: Point) -> Option<usize> {
        self.line_id_of(points)?;
        let x = self.local.get(&base)?;
        let y = points.iter().find(|&&p| p != base).and_then(|p| self.local.get(p))?;
        let id = self.join[x * self.points.len() + y] as usize;
        (self.lines[id].points.len() == points.len() && points.iter().all(|&p| self.lines[id].contains(p)))
            .then_some(id)
    }

    pub fn parallel(&self, l1: usize, l2: usize) -> bool {
        self.class_of[l1] == self.class_of[l2]
    }

    /// Image of a line under group element `g` (an index into the group).
    pub fn map_line(&self, g: usize, line: usize) -> usize {
        let l = &self.lines[line];
        let set: Vec<u32> = l.points.iter().map(|p| self.local[p] as u32).collect();
        let anchor = match l.kind {
            LineKind::Special => self.local[&l.basepoints[0]] as u32,
            _ => NO_ANCHOR,
        };
        self.line_index[&image_key(&self.perms[g], &set, anchor)]
    }

    /// A group element carrying `l1` onto `l2`, searching the whole group.
    pub fn parallel_witness(&self, l1: usize, l2: usize) -> Option<usize> {
        (0..self.perms.len()).find(|&g| self.map_line(g, l1) == l2)
    }

    /// Indices (into the group) of the `k = 1` elements.
    pub fn translation_indices(&self) -> &[usize] {
        &self.translations
    }

    /// Parallelism from line invariants; canonical pencil only.
    pub fn parallel_by_invariant(&self, plane: &Plane, l1: usize, l2: usize) -> Result<bool, SpaceError> {
        Ok(self.invariant_key(plane, l1)? == self.invariant_key(plane, l2)?)
    }

    fn invariant_key(&self, plane: &Plane, id: usize) -> Result<(u8, u32), SpaceError> {
        if !self.canonical {
            return Err(SpaceError::NotCanonical);
        }
        let line = &self.lines[id];
        Ok(match line.kind {
            LineKind::StraightPencil => (0, 0),
            LineKind::CircleLine => (1, line.circle.expect("circle lines carry a circle").a.0),
            LineKind::Special => {
                let base = line.basepoints[0];
                let other = line
                    .points
                    .iter()
                    .copied()
                    .find(|&p| p != base)
                    .expect("line has two points");
                let (Point::Affine { y: v, .. }, Point::Affine { y: z, .. }) = (base, other) else {
                    unreachable!("canonical space has affine points only")
                };
                let class = plane.field().square_class(plane.field().sub(z, v)).expect("q is odd");
                (2, (class == SquareClass::Square) as u32)
            }
        })
    }

    /// Kind and basepoint set of a line, recomputed from the definition:
    /// `x` is a basepoint of `L` when `L = x ⊔ y` for some `y ∈ L`.
    pub fn classify_line(&self, id: usize) -> (LineKind, Vec<Point>) {
        let line = &self.lines[id];
        let n = self.points.len();
        let ids: Vec<usize> = line.points.iter().map(|p| self.local[p]).collect();
        let basepoints: Vec<Point> = ids
            .iter()
            .filter(|&&x| ids.iter().any(|&y| y != x && self.join[x * n + y] as usize == id))
            .map(|&x| self.points[x])
            .collect();
        let parallel_points = line.points.windows(2).all(|w| w[0].generator() == w[1].generator());
        let kind = if parallel_points {
            LineKind::Special
        } else if basepoints.len() == line.points.len() {
            LineKind::StraightPencil
        } else {
            LineKind::CircleLine
        };
        (kind, basepoints)
    }

    /// The axiom sweep for one axiom.
    pub fn check_axiom(&self, axiom: Axiom, budget: Budget) -> Report {
        let id = format!("SKA-{axiom}");
        let mut tally = Tally::new(id, self.q);
        let mut sweep = Sweep::new(self, budget);
        match axiom {
            Axiom::L1 => sweep.l1(&mut tally),
            Axiom::L2 => sweep.l2(&mut tally),
            Axiom::P1 => sweep.p1(&mut tally),
            Axiom::P2 => sweep.p2(&mut tally),
            Axiom::T => sweep.tamaschke(&mut tally, false),
            Axiom::V => sweep.tamaschke(&mut tally, true),
            Axiom::Pgm => sweep.pgm(&mut tally),
            Axiom::Des => sweep.des(&mut tally),
            Axiom::Pap => sweep.pap(&mut tally),
        }
        tally.stat(
            "mode",
            match budget {
                Budget::Exhaustive => "exhaustive".to_string(),
                Budget::Sample { cases, seed } => format!("sample:{cases} seed:{seed}"),
            },
        );
        let report = tally.finish();
        if axiom == Axiom::Pap {
            report.with_note(PAP_READING)
        } else {
            report
        }
    }

    pub fn export(&self) -> SpaceExport {
        SpaceExport {
            q: self.q,
            lines: self
                .lines
                .iter()
                .map(|l| LineExport {
                    base: l.basepoints.clone(),
                    kind: l.kind,
                    class: l.class_id,
                    points: l.points.clone(),
                })
                .collect(),
        }
    }
}

/// Sorted point set plus, for special lines, the basepoint.
type LineKey = (Vec<u32>, u32);

const NO_ANCHOR: u32 = u32::MAX;

fn image_key(perm: &[u32], set: &[u32], anchor: u32) -> LineKey {
    let mut image: Vec<u32> = set.iter().map(|&i| perm[i as usize]).collect();
    image.sort_unstable();
    let anchor = if anchor == NO_ANCHOR {
        NO_ANCHOR
    } else {
        perm[anchor as usize]
    };
    (image, anchor)
}

const PAP_READING: &str = "x, y, z range over u⊔x minus u (repetitions allowed); x' ranges over points off u⊔x, \
so u⊔x and u⊔x' are distinct lines through u; y', z' are sought on u⊔x' minus u. \
Configurations with x' on u⊔x would force undefined joins such as y⊔x' when y = x' and are not quantified.";

fn fit_circle(plane: &Plane, pts: &[Point]) -> Option<Circle> {
    let c = plane.circle_through(pts[0], pts[1], pts[2]).ok()?;
    pts.iter().all(|&p| plane.incident(p, c)).then_some(c)
}

/// Closed-form `x ⊔ y` for the canonical pencil, sorted.
pub fn canonical_join(plane: &Plane, x: Point, y: Point) -> Result<Vec<Point>, SpaceError> {
    let (Point::Affine { x: u, y: v }, Point::Affine { x: w, y: z }) = (x, y) else {
        return Err(SpaceError::NotInSpace(if x.is_ideal() { x } else { y }));
    };
    if x == y {
        return Err(SpaceError::SamePoint(x));
    }
    let f = plane.field();
    let mut pts = if u != w {
        let a = f.div(f.sub(z, v), f.square(f.sub(w, u))).expect("u ≠ w");
        let circle = Circle {
            a,
            b: f.neg(f.mul(f.add(a, a), u)),
            c: f.add(f.mul(a, f.square(u)), v),
        };
        plane
            .circle_points(circle)
            .into_iter()
            .filter(|p| !p.is_ideal())
            .collect::<Vec<_>>()
    } else {
        let d = f.sub(z, v);
        let mut pts: Vec<Point> = f
            .nonzero()
            .map(|s| f.square(s))
            .map(|s| Point::Affine {
                x: u,
                y: f.add(v, f.mul(s, d)),
            })
            .collect();
        pts.push(x);
        pts
    };
    pts.sort();
    pts.dedup();
    Ok(pts)
}

/// Enumerates or samples the hypothesis configurations of one axiom.
struct Sweep<'a> {
    gs: &'a GroupSpace,
    n: usize,
    classes: usize,
    budget: Budget,
    rng: ChaCha8Rng,
}

impl<'a> Sweep<'a> {
    fn new(gs: &'a GroupSpace, budget: Budget) -> Self {
        let seed = match budget {
            Budget::Sample { seed, .. } => seed,
            Budget::Exhaustive => 0,
        };
        Sweep {
            gs,
            n: gs.points.len(),
            classes: gs.class_ids.len(),
            budget,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    #[inline]
    fn j(&self, x: usize, y: usize) -> usize {
        self.gs.join[x * self.n + y] as usize
    }

    /// Class of `x ⊔ y`.
    #[inline]
    fn pc(&self, x: usize, y: usize) -> usize {
        self.gs.class_of[self.j(x, y)]
    }

    #[inline]
    fn mask(&self, a: usize, class: usize) -> &'a Bits {
        &self.gs.mask[a * self.classes + class]
    }

    fn line_bits(&self, x: usize, y: usize) -> &'a Bits {
        &self.gs.line_bits[self.j(x, y)]
    }

    fn samples(&self) -> Option<u64> {
        match self.budget {
            Budget::Exhaustive => None,
            Budget::Sample { cases, .. } => Some(cases),
        }
    }

    fn point(&mut self) -> usize {
        self.rng.random_range(0..self.n)
    }

    fn distinct(&mut self, avoid: &[usize]) -> usize {
        loop {
            let p = self.point();
            if !avoid.contains(&p) {
                return p;
            }
        }
    }

    fn pick(&mut self, set: &Bits) -> Option<usize> {
        let c = set.count();
        (c > 0).then(|| set.nth(self.rng.random_range(0..c)).expect("k < count"))
    }

    fn name(&self, i: usize) -> Point {
        self.gs.points[i]
    }

    fn l1(&mut self, tally: &mut Tally) {
        let check = |s: &Self, tally: &mut Tally, x: usize, y: usize| {
            let l = s.line_bits(x, y);
            tally.check(l.get(x) && l.get(y), || json!({"x": s.name(x), "y": s.name(y)}));
        };
        match self.samples() {
            None => {
                for x in 0..self.n {
                    for y in (0..self.n).filter(|&y| y != x) {
                        check(self, tally, x, y);
                    }
                }
            }
            Some(k) => {
                for _ in 0..k {
                    let x = self.point();
                    let y = self.distinct(&[x]);
                    check(self, tally, x, y);
                }
            }
        }
    }

    fn l2(&mut self, tally: &mut Tally) {
        let check = |s: &Self, tally: &mut Tally, x: usize, y: usize, z: usize| {
            tally.check(
                s.j(x, y) == s.j(x, z),
                || json!({"x": s.name(x), "y": s.name(y), "z": s.name(z)}),
            );
        };
        match self.samples() {
            None => {
                for x in 0..self.n {
                    for y in (0..self.n).filter(|&y| y != x) {
                        for z in self.line_bits(x, y).iter().filter(|&z| z != x) {
                            check(self, tally, x, y, z);
                        }
                    }
                }
            }
            Some(k) => {
                for _ in 0..k {
                    let x = self.point();
                    let y = self.distinct(&[x]);
                    let mut rest = self.line_bits(x, y).clone();
                    rest.clear(x);
                    let z = self.pick(&rest).expect("y is on the line");
                    check(self, tally, x, y, z);
                }
            }
        }
    }

    fn p1(&mut self, tally: &mut Tally) {
        // Distinct lines with basepoint x, per class.
        let mut per_class = vec![0u32; self.n * self.classes];
        for x in 0..self.n {
            let mut seen: Vec<usize> = (0..self.n).filter(|&y| y != x).map(|y| self.j(x, y)).collect();
            seen.sort_unstable();
            seen.dedup();
            for l in seen {
                per_class[x * self.classes + self.gs.class_of[l]] += 1;
            }
        }
        let lines = self.gs.lines.len();
        let check = |s: &Self, tally: &mut Tally, l: usize, x: usize| {
            let c = per_class[x * s.classes + s.gs.class_of[l]];
            tally.check(c == 1, || json!({"line": l, "x": s.name(x), "parallel_lines_at_x": c}));
        };
        match self.samples() {
            None => {
                for l in 0..lines {
                    for x in 0..self.n {
                        check(self, tally, l, x);
                    }
                }
            }
            Some(k) => {
                for _ in 0..k {
                    let l = self.rng.random_range(0..lines);
                    let x = self.point();
                    check(self, tally, l, x);
                }
            }
        }
    }

    fn p2(&mut self, tally: &mut Tally) {
        let check = |s: &Self, tally: &mut Tally, x: usize, y: usize, x2: usize, y2: usize| {
            tally.check(
                s.pc(y, x) == s.pc(y2, x2),
                || json!({"x": s.name(x), "y": s.name(y), "x'": s.name(x2), "y'": s.name(y2)}),
            );
        };
        match self.samples() {
            None => {
                for x in 0..self.n {
                    for y in (0..self.n).filter(|&y| y != x) {
                        let c = self.pc(x, y);
                        for x2 in 0..self.n {
                            for y2 in self.mask(x2, c).iter() {
                                check(self, tally, x, y, x2, y2);
                            }
                        }
                    }
                }
            }
            Some(k) => {
                for _ in 0..k {
                    let x = self.point();
                    let y = self.distinct(&[x]);
                    let x2 = self.point();
                    let m = self.mask(x2, self.pc(x, y));
                    match self.pick(m) {
                        Some(y2) => check(self, tally, x, y, x2, y2),
                        None => tally.fail(json!({"x'": self.name(x2), "reason": "no parallel line at x'"})),
                    }
                }
            }
        }
    }

    /// Tamaschke's condition; with `veblen` the case `x = x'`.
    fn tamaschke(&mut self, tally: &mut Tally, veblen: bool) {
        let check = |s: &Self, tally: &mut Tally, x: usize, y: usize, z: usize, x2: usize, y2: usize| {
            let ok = s.mask(x2, s.pc(x, z)).meets(s.mask(y2, s.pc(y, z)));
            tally.check(
                ok,
                || json!({"x": s.name(x), "y": s.name(y), "z": s.name(z), "x'": s.name(x2), "y'": s.name(y2)}),
            );
        };
        match self.samples() {
            None => {
                for x in 0..self.n {
                    for y in (0..self.n).filter(|&y| y != x) {
                        let c = self.pc(x, y);
                        for z in (0..self.n).filter(|&z| z != x && z != y) {
                            let primes: Vec<usize> = if veblen { vec![x] } else { (0..self.n).collect() };
                            for x2 in primes {
                                for y2 in self.mask(x2, c).iter() {
                                    check(self, tally, x, y, z, x2, y2);
                                }
                            }
                        }
                    }
                }
            }
            Some(k) => {
                for _ in 0..k {
                    let x = self.point();
                    let y = self.distinct(&[x]);
                    let z = self.distinct(&[x, y]);
                    let x2 = if veblen { x } else { self.point() };
                    match self.pick(self.mask(x2, self.pc(x, y))) {
                        Some(y2) => check(self, tally, x, y, z, x2, y2),
                        None => tally.fail(json!({"x'": self.name(x2), "reason": "no parallel line at x'"})),
                    }
                }
            }
        }
    }

    fn pgm(&mut self, tally: &mut Tally) {
        let check = |s: &Self, tally: &mut Tally, x: usize, y: usize, z: usize| {
            let ok = s.mask(z, s.pc(x, y)).meets(s.mask(y, s.pc(x, z)));
            tally.check(ok, || json!({"x": s.name(x), "y": s.name(y), "z": s.name(z)}));
        };
        match self.samples() {
            None => {
                for x in 0..self.n {
                    for y in (0..self.n).filter(|&y| y != x) {
                        for z in (0..self.n).filter(|&z| z != x && z != y) {
                            check(self, tally, x, y, z);
                        }
                    }
                }
            }
            Some(k) => {
                for _ in 0..k {
                    let x = self.point();
                    let y = self.distinct(&[x]);
                    let z = self.distinct(&[x, y]);
                    check(self, tally, x, y, z);
                }
            }
        }
    }

    fn des(&mut self, tally: &mut Tally) {
        let check = |s: &Self, tally: &mut Tally, u: usize, x: usize, y: usize, z: usize, x2: usize| {
            let mut uy = s.line_bits(u, y).clone();
            uy.clear(u);
            let mut uz = s.line_bits(u, z).clone();
            uz.clear(u);
            // y' on u⊔y with x⊔y ∥ x'⊔y' (so y' ≠ x').
            let ys = uy.and(s.mask(x2, s.pc(x, y)));
            let zs = uz.and(s.mask(x2, s.pc(x, z)));
            let c_yz = s.pc(y, z);
            let ok = ys.iter().any(|y2| zs.meets(s.mask(y2, c_yz)));
            tally.check(
                ok,
                || json!({"u": s.name(u), "x": s.name(x), "y": s.name(y), "z": s.name(z), "x'": s.name(x2)}),
            );
        };
        match self.samples() {
            None => {
                for u in 0..self.n {
                    for x in (0..self.n).filter(|&x| x != u) {
                        let ux: Vec<usize> = self.line_bits(u, x).iter().filter(|&p| p != u).collect();
                        for y in (0..self.n).filter(|&y| y != u && y != x) {
                            for z in (0..self.n).filter(|&z| z != u && z != x && z != y) {
                                for &x2 in &ux {
                                    check(self, tally, u, x, y, z, x2);
                                }
                            }
                        }
                    }
                }
            }
            Some(k) => {
                for _ in 0..k {
                    let u = self.point();
                    let x = self.distinct(&[u]);
                    let y = self.distinct(&[u, x]);
                    let z = self.distinct(&[u, x, y]);
                    let mut ux = self.line_bits(u, x).clone();
                    ux.clear(u);
                    let x2 = self.pick(&ux).expect("x is on u⊔x");
                    check(self, tally, u, x, y, z, x2);
                }
            }
        }
    }

    fn pap(&mut self, tally: &mut Tally) {
        let check = |s: &Self, tally: &mut Tally, u: usize, x: usize, y: usize, z: usize, x2: usize| {
            let mut m = s.line_bits(u, x2).clone();
            m.clear(u);
            // y' with y⊔x' ∥ z⊔y' and z' with x⊔x' ∥ z⊔z', both on u⊔x'.
            let ys = m.and(s.mask(z, s.pc(y, x2)));
            let zs = m.and(s.mask(z, s.pc(x, x2)));
            let ok = ys
                .iter()
                .any(|y2| y2 != x && zs.iter().any(|z2| z2 != y && s.pc(x, y2) == s.pc(y, z2)));
            tally.check(
                ok,
                || json!({"u": s.name(u), "x": s.name(x), "y": s.name(y), "z": s.name(z), "x'": s.name(x2)}),
            );
        };
        match self.samples() {
            None => {
                for u in 0..self.n {
                    for x in (0..self.n).filter(|&x| x != u) {
                        let line = self.line_bits(u, x);
                        if self.j(u, x) != self.j(u, line.iter().find(|&p| p != u).expect("nonempty")) {
                            continue;
                        }
                        let on: Vec<usize> = line.iter().filter(|&p| p != u).collect();
                        let off: Vec<usize> = (0..self.n).filter(|&p| p != u && !line.get(p)).collect();
                        for &y in &on {
                            for &z in &on {
                                for &x2 in &off {
                                    check(self, tally, u, x, y, z, x2);
                                }
                            }
                        }
                    }
                }
            }
            Some(k) => {
                for _ in 0..k {
                    let u = self.point();
                    let x = self.distinct(&[u]);
                    let mut on = self.line_bits(u, x).clone();
                    on.clear(u);
                    let y = self.pick(&on).expect("x is on u⊔x");
                    let z = self.pick(&on).expect("x is on u⊔x");
                    let x2 = loop {
                        let p = self.point();
                        if p != u && !on.get(p) {
                            break p;
                        }
                    };
                    check(self, tally, u, x, y, z, x2);
                }
            }
        }
    }
}
