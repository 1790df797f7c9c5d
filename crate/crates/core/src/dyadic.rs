//! Exact dyadic geometry: intervals, squares, convex trees, leaves,
//! generations, boundary lattice points and Whitney regions.
//!
//! Everything here is integer arithmetic on `(k, mx, my)`. A square at scale
//! `k` is `[2^k mx, 2^k (mx+1)] x [2^k my, 2^k (my+1)]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

fn pow2(k: i32) -> f64 {
    2f64.powi(k)
}

/// The interval `[2^k m, 2^k (m+1)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DyadicInterval {
    pub k: i32,
    pub m: i64,
}

impl DyadicInterval {
    pub fn new(k: i32, m: i64) -> Self {
        DyadicInterval { k, m }
    }

    pub fn length(&self) -> f64 {
        pow2(self.k)
    }

    pub fn bounds(&self) -> (f64, f64) {
        let len = self.length();
        (len * self.m as f64, len * (self.m + 1) as f64)
    }

    pub fn parent(&self) -> Self {
        DyadicInterval { k: self.k + 1, m: self.m.div_euclid(2) }
    }

    /// The ancestor at scale `k` (or `self` when `k == self.k`).
    pub fn ancestor(&self, k: i32) -> Option<Self> {
        if k < self.k {
            return None;
        }
        let shift = (k - self.k) as u32;
        Some(DyadicInterval { k, m: self.m >> shift })
    }

    pub fn contains(&self, other: &Self) -> bool {
        other.ancestor(self.k).is_some_and(|a| a == *self)
    }

    /// Nested or almost disjoint: intersection has positive length only if nested.
    pub fn overlaps(&self, other: &Self) -> bool {
        self.contains(other) || other.contains(self)
    }
}

/// A dyadic square of side `2^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DyadicSquare {
    pub k: i32,
    pub mx: i64,
    pub my: i64,
}

impl fmt::Display for DyadicSquare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.k, self.mx, self.my)
    }
}

impl DyadicSquare {
    pub fn new(k: i32, mx: i64, my: i64) -> Self {
        DyadicSquare { k, mx, my }
    }

    pub fn unit() -> Self {
        DyadicSquare::new(0, 0, 0)
    }

    pub fn side(&self) -> f64 {
        pow2(self.k)
    }

    pub fn area(&self) -> f64 {
        pow2(2 * self.k)
    }

    pub fn x_interval(&self) -> DyadicInterval {
        DyadicInterval::new(self.k, self.mx)
    }

    pub fn y_interval(&self) -> DyadicInterval {
        DyadicInterval::new(self.k, self.my)
    }

    /// `(x0, x1, y0, y1)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let (x0, x1) = self.x_interval().bounds();
        let (y0, y1) = self.y_interval().bounds();
        (x0, x1, y0, y1)
    }

    pub fn parent(&self) -> Self {
        DyadicSquare::new(self.k + 1, self.mx.div_euclid(2), self.my.div_euclid(2))
    }

    pub fn ancestor(&self, k: i32) -> Option<Self> {
        if k < self.k {
            return None;
        }
        let shift = (k - self.k) as u32;
        Some(DyadicSquare::new(k, self.mx >> shift, self.my >> shift))
    }

    /// Children in the order lower-left, lower-right, upper-left, upper-right.
    pub fn children(&self) -> [DyadicSquare; 4] {
        let (k, x, y) = (self.k - 1, 2 * self.mx, 2 * self.my);
        [
            DyadicSquare::new(k, x, y),
            DyadicSquare::new(k, x + 1, y),
            DyadicSquare::new(k, x, y + 1),
            DyadicSquare::new(k, x + 1, y + 1),
        ]
    }

    /// All descendants exactly `generations` levels below.
    pub fn descendants(&self, generations: u32) -> impl Iterator<Item = DyadicSquare> + '_ {
        let side = 1i64 << generations;
        let k = self.k - generations as i32;
        (0..side).flat_map(move |dy| {
            (0..side).map(move |dx| DyadicSquare::new(k, self.mx * side + dx, self.my * side + dy))
        })
    }

    pub fn contains(&self, other: &Self) -> bool {
        other.ancestor(self.k).is_some_and(|a| a == *self)
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.contains(other) || other.contains(self)
    }

    /// Contains the point `(x, y)` in the half-open sense `[x0, x1) x [y0, y1)`.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        let (x0, x1, y0, y1) = self.bounds();
        x >= x0 && x < x1 && y >= y0 && y < y1
    }

    /// The scale-`k` square containing the point, half-open convention.
    pub fn containing_point(k: i32, x: f64, y: f64) -> Self {
        let side = pow2(k);
        DyadicSquare::new(k, (x / side).floor() as i64, (y / side).floor() as i64)
    }
}

/// A finite collection with a root containing every member. Convexity is not
/// assumed; see [`Tree::is_convex`] and [`ConvexTree`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    root: DyadicSquare,
    members: BTreeSet<DyadicSquare>,
}

impl Tree {
    /// Builds a tree; the root is inserted if missing. Fails if a member is
    /// not contained in the root.
    pub fn new(root: DyadicSquare, members: impl IntoIterator<Item = DyadicSquare>) -> Result<Self> {
        let mut set: BTreeSet<DyadicSquare> = members.into_iter().collect();
        set.insert(root);
        if let Some(bad) = set.iter().find(|s| !root.contains(s)) {
            return Err(Error::NotInRoot { square: bad.to_string(), root: root.to_string() });
        }
        Ok(Tree { root, members: set })
    }

    pub fn root(&self) -> DyadicSquare {
        self.root
    }

    pub fn members(&self) -> &BTreeSet<DyadicSquare> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, s: &DyadicSquare) -> bool {
        self.members.contains(s)
    }

    /// Every member other than the root has its parent in the tree. With all
    /// members inside the root this is equivalent to closure under
    /// intermediate squares.
    pub fn is_convex(&self) -> bool {
        self.members
            .iter()
            .all(|s| *s == self.root || self.members.contains(&s.parent()))
    }
}

/// A tree verified to be convex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvexTree(Tree);

impl ConvexTree {
    pub fn new(root: DyadicSquare, members: impl IntoIterator<Item = DyadicSquare>) -> Result<Self> {
        Tree::new(root, members)?.try_into()
    }

    pub fn root_only(root: DyadicSquare) -> Self {
        ConvexTree(Tree { root, members: BTreeSet::from([root]) })
    }

    /// The full tree of all squares down to `depth` generations below `root`.
    pub fn full(root: DyadicSquare, depth: u32) -> Self {
        let members = (0..=depth).flat_map(|g| root.descendants(g).collect::<Vec<_>>());
        ConvexTree(Tree { root, members: members.collect() })
    }

    pub fn root(&self) -> DyadicSquare {
        self.0.root
    }

    pub fn members(&self) -> &BTreeSet<DyadicSquare> {
        &self.0.members
    }

    pub fn tree(&self) -> &Tree {
        &self.0
    }

    pub fn contains(&self, s: &DyadicSquare) -> bool {
        self.0.contains(s)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Scale of the smallest member.
    pub fn finest_scale(&self) -> i32 {
        self.members().iter().map(|s| s.k).min().unwrap_or(self.root().k)
    }

    /// Squares outside the tree whose parent is in the tree.
    pub fn leaves(&self) -> BTreeSet<DyadicSquare> {
        self.members()
            .iter()
            .flat_map(|s| s.children())
            .filter(|c| !self.contains(c))
            .collect()
    }

    /// The members at scale `k`.
    pub fn generation(&self, k: i32) -> Generation<'_> {
        let squares = self.members().iter().filter(|s| s.k == k).copied().collect();
        Generation { k, squares, tree: self }
    }

    /// Non-empty generations from the root downwards.
    pub fn generations(&self) -> Vec<Generation<'_>> {
        let root = self.root().k;
        (self.finest_scale()..=root)
            .rev()
            .map(|k| self.generation(k))
            .filter(|g| !g.squares.is_empty())
            .collect()
    }

    /// Lattice points of `2^k Z x 2^k Z` on the topological boundary of the
    /// union of the scale-`k` members, in units of `2^k`.
    pub fn boundary_lattice_points(&self, k: i32) -> BTreeSet<(i64, i64)> {
        let gen = self.generation(k);
        let inside: BTreeSet<(i64, i64)> = gen.squares.iter().map(|s| (s.mx, s.my)).collect();
        let mut points = BTreeSet::new();
        for &(mx, my) in &inside {
            for (px, py) in [(mx, my), (mx + 1, my), (mx, my + 1), (mx + 1, my + 1)] {
                let incident = [(px - 1, py - 1), (px, py - 1), (px - 1, py), (px, py)];
                let members = incident.iter().filter(|c| inside.contains(c)).count();
                if members > 0 && members < 4 {
                    points.insert((px, py));
                }
            }
        }
        points
    }

    /// `sum_k 2^{2k} #boundary_lattice_points(k)`.
    pub fn boundary_weight(&self) -> f64 {
        self.generations()
            .iter()
            .map(|g| pow2(2 * g.k) * self.boundary_lattice_points(g.k).len() as f64)
            .sum()
    }

    /// `boundary_weight / |R_T|`, computed in units of the root area.
    pub fn boundary_ratio(&self) -> f64 {
        let root = self.root().k;
        self.generations()
            .iter()
            .map(|g| pow2(2 * (g.k - root)) * self.boundary_lattice_points(g.k).len() as f64)
            .sum()
    }

    /// Text form: first line the root, then one `k mx my` line per other member.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.root());
        for s in self.members().iter().filter(|s| **s != self.root()) {
            out.push_str(&format!("{s}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut squares = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse_err = |msg: &str| Error::Parse { line: i + 1, message: msg.to_string() };
            if parts.len() != 3 {
                return Err(parse_err("expected `k mx my`"));
            }
            let k = parts[0].parse::<i32>().map_err(|e| parse_err(&e.to_string()))?;
            let mx = parts[1].parse::<i64>().map_err(|e| parse_err(&e.to_string()))?;
            let my = parts[2].parse::<i64>().map_err(|e| parse_err(&e.to_string()))?;
            squares.push(DyadicSquare::new(k, mx, my));
        }
        let root = *squares.first().ok_or(Error::Parse { line: 0, message: "empty tree".into() })?;
        ConvexTree::new(root, squares)
    }
}

impl TryFrom<Tree> for ConvexTree {
    type Error = Error;

    fn try_from(tree: Tree) -> Result<Self> {
        if let Some(s) = tree
            .members
            .iter()
            .find(|s| **s != tree.root && !tree.members.contains(&s.parent()))
        {
            return Err(Error::NotConvex(format!("parent of {s} is missing")));
        }
        Ok(ConvexTree(tree))
    }
}

/// One generation `T_k` of a convex tree. Its complement `T_k^c` is the set of
/// scale-`k` squares for which [`Generation::in_complement`] holds.
#[derive(Debug, Clone)]
pub struct Generation<'a> {
    pub k: i32,
    pub squares: Vec<DyadicSquare>,
    tree: &'a ConvexTree,
}

impl Generation<'_> {
    pub fn contains(&self, s: &DyadicSquare) -> bool {
        s.k == self.k && self.tree.contains(s)
    }

    pub fn in_complement(&self, s: &DyadicSquare) -> bool {
        s.k == self.k && !self.tree.contains(s)
    }

    /// Whether the point lies in the union `T_k` (half-open squares).
    pub fn covers_point(&self, x: f64, y: f64) -> bool {
        self.tree.contains(&DyadicSquare::containing_point(self.k, x, y))
    }

    pub fn area(&self) -> f64 {
        self.squares.len() as f64 * pow2(2 * self.k)
    }
}

/// One Whitney box `S x [l(S)/2, l(S)]`. The `t` interval is stored through
/// the square's scale; `t_bounds` gives it in length units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct WhitneyBox {
    pub square: DyadicSquare,
}

impl WhitneyBox {
    pub fn t_bounds(&self) -> (f64, f64) {
        (pow2(self.square.k - 1), pow2(self.square.k))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WhitneyRegion {
    pub boxes: Vec<WhitneyBox>,
}

impl WhitneyRegion {
    pub fn from_squares<'a>(squares: impl IntoIterator<Item = &'a DyadicSquare>) -> Self {
        WhitneyRegion { boxes: squares.into_iter().map(|&square| WhitneyBox { square }).collect() }
    }

    /// Boxes grouped by scale: `k -> squares`.
    pub fn slices(&self) -> BTreeMap<i32, Vec<DyadicSquare>> {
        let mut out: BTreeMap<i32, Vec<DyadicSquare>> = BTreeMap::new();
        for b in &self.boxes {
            out.entry(b.square.k).or_default().push(b.square);
        }
        out
    }

    pub fn volume_dt_over_t(&self) -> f64 {
        self.boxes.iter().map(|b| b.square.area() * std::f64::consts::LN_2).sum()
    }
}

pub fn whitney_region(collection: &[DyadicSquare]) -> WhitneyRegion {
    WhitneyRegion::from_squares(collection)
}

/// Random convex tree rooted at the unit square. Top-down, each child of a
/// member is added independently with `refine_probability`, down to
/// `max_depth` generations below the root.
pub fn random_convex_tree(seed: u64, max_depth: u32, refine_probability: f64) -> ConvexTree {
    random_convex_tree_at(DyadicSquare::unit(), seed, max_depth, refine_probability)
}

pub fn random_convex_tree_at(root: DyadicSquare, seed: u64, max_depth: u32, refine_probability: f64) -> ConvexTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_convex_tree_with(root, &mut rng, max_depth, refine_probability)
}

pub fn random_convex_tree_with<R: Rng>(
    root: DyadicSquare,
    rng: &mut R,
    max_depth: u32,
    refine_probability: f64,
) -> ConvexTree {
    let p = refine_probability.clamp(0.0, 1.0);
    let mut members = BTreeSet::from([root]);
    let mut frontier = vec![root];
    for _ in 0..max_depth {
        let mut next = Vec::new();
        for s in frontier {
            for c in s.children() {
                if rng.gen_bool(p) {
                    members.insert(c);
                    next.push(c);
                }
            }
        }
        frontier = next;
    }
    ConvexTree(Tree { root, members })
}

/// Every convex tree on `root` whose members are at most `depth` generations
/// below it.
pub fn enumerate_convex_trees(root: DyadicSquare, depth: u32) -> Vec<ConvexTree> {
    fn subtrees(s: DyadicSquare, depth: u32) -> Vec<Vec<DyadicSquare>> {
        if depth == 0 {
            return vec![vec![s]];
        }
        // Each child is either absent or the root of a convex subtree.
        let mut options: Vec<Vec<Vec<DyadicSquare>>> = Vec::new();
        for c in s.children() {
            let mut opts = vec![Vec::new()];
            opts.extend(subtrees(c, depth - 1));
            options.push(opts);
        }
        let mut out = Vec::new();
        for a in &options[0] {
            for b in &options[1] {
                for c in &options[2] {
                    for d in &options[3] {
                        let mut v = Vec::with_capacity(1 + a.len() + b.len() + c.len() + d.len());
                        v.push(s);
                        v.extend_from_slice(a);
                        v.extend_from_slice(b);
                        v.extend_from_slice(c);
                        v.extend_from_slice(d);
                        out.push(v);
                    }
                }
            }
        }
        out
    }
    subtrees(root, depth)
        .into_iter()
        .map(|members| ConvexTree(Tree { root, members: members.into_iter().collect() }))
        .collect()
}

/// Sum of member areas relative to the smallest scale present, as an exact integer.
pub fn area_units(squares: impl IntoIterator<Item = DyadicSquare>, finest: i32) -> u128 {
    squares
        .into_iter()
        .map(|s| {
            assert!(s.k >= finest, "square finer than the reference scale");
            1u128 << (2 * (s.k - finest) as u32)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(k: i32, x: i64, y: i64) -> DyadicSquare {
        DyadicSquare::new(k, x, y)
    }

    #[test]
    fn children_tile_the_unit_square() {
        let s = DyadicSquare::unit();
        let c = s.children();
        assert_eq!(c, [sq(-1, 0, 0), sq(-1, 1, 0), sq(-1, 0, 1), sq(-1, 1, 1)]);
        let area: f64 = c.iter().map(|c| c.area()).sum();
        assert_eq!(area, s.area());
        assert!(c.iter().all(|c| c.parent() == s));
        assert_eq!(sq(-1, 1, 0).bounds(), (0.5, 1.0, 0.0, 0.5));
    }

    #[test]
    fn negative_indices_have_consistent_parents() {
        let s = sq(-2, -3, -1);
        assert_eq!(s.parent(), sq(-1, -2, -1));
        assert!(s.parent().children().contains(&s));
    }

    #[test]
    fn convexity_examples() {
        let r = DyadicSquare::unit();
        assert!(Tree::new(r, [sq(-1, 0, 0), sq(-2, 0, 0)]).unwrap().is_convex());
        assert!(!Tree::new(r, [sq(-2, 0, 0)]).unwrap().is_convex());
        assert!(Tree::new(r, []).unwrap().is_convex());
        assert!(matches!(Tree::new(r, [sq(0, 1, 0)]), Err(Error::NotInRoot { .. })));
        assert!(matches!(ConvexTree::new(r, [sq(-2, 0, 0)]), Err(Error::NotConvex(_))));
    }

    #[test]
    fn leaves_of_small_trees() {
        let r = DyadicSquare::unit();
        let t = ConvexTree::root_only(r);
        assert_eq!(t.leaves(), r.children().into_iter().collect());
        let t = ConvexTree::new(r, [sq(-1, 0, 0)]).unwrap();
        let mut expected: BTreeSet<_> = r.children().into_iter().filter(|c| *c != sq(-1, 0, 0)).collect();
        expected.extend(sq(-1, 0, 0).children());
        assert_eq!(t.leaves(), expected);
    }

    #[test]
    fn generations_of_root_only_tree() {
        let t = ConvexTree::root_only(DyadicSquare::unit());
        assert_eq!(t.generation(0).squares, vec![DyadicSquare::unit()]);
        assert!(t.generation(5).squares.is_empty());
        assert!(t.generation(0).in_complement(&sq(0, 1, 0)));
    }

    #[test]
    fn boundary_points_of_unit_and_double_square() {
        let t = ConvexTree::root_only(DyadicSquare::unit());
        let pts = t.boundary_lattice_points(0);
        assert_eq!(pts, BTreeSet::from([(0, 0), (1, 0), (0, 1), (1, 1)]));
        assert_eq!(t.boundary_weight(), 4.0);

        let root = sq(1, 0, 0);
        let t = ConvexTree::new(root, root.children()).unwrap();
        assert_eq!(t.boundary_lattice_points(0).len(), 8);
        assert_eq!(t.boundary_lattice_points(1).len(), 4);
        assert_eq!(t.boundary_weight(), 24.0);
        assert_eq!(t.boundary_ratio(), 6.0);
    }

    #[test]
    fn whitney_region_boxes() {
        let w = whitney_region(&[DyadicSquare::unit()]);
        assert_eq!(w.boxes.len(), 1);
        assert_eq!(w.boxes[0].t_bounds(), (0.5, 1.0));
    }

    #[test]
    fn random_tree_edge_cases() {
        assert_eq!(random_convex_tree(3, 6, 0.0).len(), 1);
        assert_eq!(random_convex_tree(3, 2, 1.0).len(), 21);
        assert_eq!(random_convex_tree(9, 5, 0.5), random_convex_tree(9, 5, 0.5));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_convex_trees(DyadicSquare::unit(), 0).len(), 1);
        assert_eq!(enumerate_convex_trees(DyadicSquare::unit(), 1).len(), 16);
    }

    #[test]
    fn text_round_trip_and_errors() {
        let t = random_convex_tree(11, 4, 0.6);
        assert_eq!(ConvexTree::from_text(&t.to_text()).unwrap(), t);
        assert!(matches!(ConvexTree::from_text("0 0 0\n-1 0"), Err(Error::Parse { line: 2, .. })));
    }
}
