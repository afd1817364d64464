//! Fast simplified successive-cancellation decoding with a static,
//! non-uniform LLR bit-width plan.
//!
//! The decode tree is the polar factor tree pruned at Rate-0, Rate-1,
//! repetition and single-parity-check nodes. The planner propagates the set
//! of reachable integer LLR values along every edge: `f` keeps the set, `g`
//! forms `{±a + b}`, sets whose members are all even are halved, and the
//! result is clipped to `q_max` bits. Those per-edge shift and clip rules are
//! then applied verbatim by the decoder on every frame.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::polar::CodeSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Rate0,
    Rate1,
    Rep,
    Spc,
    Branch { left: usize, right: usize },
}

impl NodeKind {
    pub fn label(&self) -> &'static str {
        match self {
            NodeKind::Rate0 => "Rate0",
            NodeKind::Rate1 => "Rate1",
            NodeKind::Rep => "Rep",
            NodeKind::Spc => "SPC",
            NodeKind::Branch { .. } => "Branch",
        }
    }

    pub fn is_leaf(&self) -> bool {
        !matches!(self, NodeKind::Branch { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub start: usize,
    pub len: usize,
    pub depth: usize,
    pub kind: NodeKind,
}

/// Pruned factor tree; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeTree {
    nodes: Vec<TreeNode>,
}

fn classify(frozen: &[bool]) -> Option<NodeKind> {
    let len = frozen.len();
    let frozen_count = frozen.iter().filter(|&&f| f).count();
    if frozen_count == len {
        Some(NodeKind::Rate0)
    } else if frozen_count == 0 {
        Some(NodeKind::Rate1)
    } else if frozen_count == len - 1 && !frozen[len - 1] {
        Some(NodeKind::Rep)
    } else if frozen_count == 1 && frozen[0] {
        Some(NodeKind::Spc)
    } else {
        None
    }
}

impl DecodeTree {
    pub fn build(code: &CodeSpec) -> Self {
        Self::build_with(code, true)
    }

    /// Tree split all the way down to single bits (`prune = false`) or
    /// pruned at the largest special nodes.
    pub fn build_with(code: &CodeSpec, prune: bool) -> Self {
        let mut nodes = Vec::new();
        Self::grow(code.frozen_mask(), 0, code.len(), 0, prune, &mut nodes);
        Self { nodes }
    }

    fn grow(
        frozen: &[bool],
        start: usize,
        len: usize,
        depth: usize,
        prune: bool,
        nodes: &mut Vec<TreeNode>,
    ) -> usize {
        let id = nodes.len();
        let region = &frozen[start..start + len];
        let special = if prune || len == 1 {
            classify(region)
        } else {
            None
        };
        nodes.push(TreeNode {
            start,
            len,
            depth,
            kind: NodeKind::Rate0,
        });
        let kind = match special {
            Some(k) => k,
            None => {
                let half = len / 2;
                let left = Self::grow(frozen, start, half, depth + 1, prune, nodes);
                let right = Self::grow(frozen, start + half, half, depth + 1, prune, nodes);
                NodeKind::Branch { left, right }
            }
        };
        nodes[id].kind = kind;
        id
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes[0].len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Leaves in decoding (left-to-right) order.
    pub fn leaves(&self) -> Vec<TreeNode> {
        let mut out = Vec::new();
        self.collect_leaves(0, &mut out);
        out
    }

    fn collect_leaves(&self, id: usize, out: &mut Vec<TreeNode>) {
        match self.nodes[id].kind {
            NodeKind::Branch { left, right } => {
                self.collect_leaves(left, out);
                self.collect_leaves(right, out);
            }
            _ => out.push(self.nodes[id]),
        }
    }

    /// Branch nodes in breadth-first order.
    pub fn branches_bfs(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(id) = queue.pop_front() {
            if let NodeKind::Branch { left, right } = self.nodes[id].kind {
                out.push(id);
                queue.push_back(left);
                queue.push_back(right);
            }
        }
        out
    }
}

/// Symmetric set of integer LLR values reachable on an edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueSet(Vec<i64>);

impl ValueSet {
    pub fn new(values: impl IntoIterator<Item = i64>) -> Self {
        let mut v: Vec<i64> = values.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs(&self) -> i64 {
        self.0.iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    /// `{±a + b}`; for symmetric sets this is the Minkowski sum.
    fn g_image(&self, other: &ValueSet) -> ValueSet {
        let (ma, mb) = (self.max_abs(), other.max_abs());
        let span = ma + mb;
        let mut hit = vec![false; (2 * span + 1) as usize];
        for &a in &self.0 {
            for &b in &other.0 {
                hit[(a + b + span) as usize] = true;
                hit[(b - a + span) as usize] = true;
            }
        }
        ValueSet::new(
            hit.iter()
                .enumerate()
                .filter(|(_, &h)| h)
                .map(|(i, _)| i as i64 - span),
        )
    }

    fn all_even(&self) -> bool {
        self.0.iter().any(|&v| v != 0) && self.0.iter().all(|v| v % 2 == 0)
    }

    /// Bits needed to tell the members apart.
    pub fn width(&self) -> u32 {
        let size = self.0.len().max(2) as u64;
        64 - (size - 1).leading_zeros()
    }
}

/// Rescale/clip rule and resulting value set of one edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgePlan {
    pub values: ValueSet,
    pub width: u32,
    /// Number of halvings applied to the incoming values.
    pub shift: u32,
    /// Saturation level; `None` when the edge is not clipped.
    pub clip: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanOptions {
    /// Maximum bit width; `None` for unbounded precision.
    pub q_max: Option<u32>,
    /// Divide a value set by two while all its members are even.
    pub halving: bool,
    /// Channel LLR alphabet.
    pub channel: ValueSet,
}

impl PlanOptions {
    pub fn binary(q_max: Option<u32>) -> Self {
        Self {
            q_max,
            halving: true,
            channel: ValueSet::new([-1, 1]),
        }
    }
}

/// Per-edge bit widths for a [`DecodeTree`]; `edges[id]` is the edge feeding
/// node `id`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantPlan {
    pub options: PlanOptions,
    pub edges: Vec<EdgePlan>,
}

fn saturation_level(q: u32) -> i64 {
    (1i64 << (q - 1).min(62)) - 1
}

fn rescale_and_clip(set: ValueSet, opts: &PlanOptions) -> EdgePlan {
    let mut set = set;
    let mut shift = 0;
    if opts.halving {
        while set.all_even() {
            set = ValueSet::new(set.0.iter().map(|v| v / 2));
            shift += 1;
        }
    }
    let clip = opts.q_max.map(saturation_level);
    if let Some(level) = clip {
        set = ValueSet::new(set.0.iter().map(|v| (*v).clamp(-level, level)));
    }
    let width = set.width();
    EdgePlan {
        values: set,
        width,
        shift,
        clip,
    }
}

pub fn plan_bitwidths(tree: &DecodeTree, options: PlanOptions) -> QuantPlan {
    let mut edges: Vec<Option<EdgePlan>> = vec![None; tree.nodes.len()];
    edges[0] = Some(rescale_and_clip(options.channel.clone(), &options));
    for (id, node) in tree.nodes.iter().enumerate() {
        if let NodeKind::Branch { left, right } = node.kind {
            let parent = edges[id].clone().expect("parents precede children");
            let g_values = parent.values.g_image(&parent.values);
            edges[right] = Some(rescale_and_clip(g_values, &options));
            edges[left] = Some(EdgePlan {
                shift: 0,
                clip: None,
                ..parent
            });
        }
    }
    QuantPlan {
        options,
        edges: edges
            .into_iter()
            .map(|e| e.expect("every node planned"))
            .collect(),
    }
}

impl QuantPlan {
    pub fn max_width(&self) -> u32 {
        self.edges.iter().map(|e| e.width).max().unwrap_or(0)
    }

    /// Widths in the order used for figure-style annotation: the channel edge,
    /// then the f and g edge of every branch in breadth-first order.
    pub fn bfs_edge_widths(&self, tree: &DecodeTree) -> Vec<u32> {
        let mut out = vec![self.edges[0].width];
        for id in tree.branches_bfs() {
            if let NodeKind::Branch { left, right } = tree.nodes[id].kind {
                out.push(self.edges[left].width);
                out.push(self.edges[right].width);
            }
        }
        out
    }

    /// Indented pre-order listing of the tree with per-edge widths.
    pub fn render(&self, tree: &DecodeTree) -> String {
        let mut s = String::new();
        let q = self
            .options
            .q_max
            .map_or("inf".to_string(), |q| q.to_string());
        let _ = writeln!(
            s,
            "# N={} q_max={} max_width={}",
            tree.len(),
            q,
            self.max_width()
        );
        self.render_node(tree, 0, &mut s);
        s
    }

    fn render_node(&self, tree: &DecodeTree, id: usize, s: &mut String) {
        let node = &tree.nodes[id];
        let e = &self.edges[id];
        let _ = write!(
            s,
            "{:indent$}{}-{} [{},{}) w={} |V|={} max={}",
            "",
            node.kind.label(),
            node.len,
            node.start,
            node.start + node.len,
            e.width,
            e.values.len(),
            e.values.max_abs(),
            indent = 2 * node.depth
        );
        if e.shift > 0 {
            let _ = write!(s, " halve={}", e.shift);
        }
        s.push('\n');
        if let NodeKind::Branch { left, right } = node.kind {
            self.render_node(tree, left, s);
            self.render_node(tree, right, s);
        }
    }
}

/// Arithmetic the decoder needs from an LLR representation.
pub trait Llr: Copy + Default + PartialOrd + Send + Sync + 'static {
    fn zero() -> Self;
    fn magnitude(self) -> Self;
    fn is_negative(self) -> bool;
    /// Min-sum check-node update.
    fn f(a: Self, b: Self) -> Self;
    /// `(-1)^bit a + b`.
    fn g(a: Self, b: Self, bit: u8) -> Self;
    /// Hard decision on the sum of all values (repetition node).
    fn sum_is_negative(values: &[Self]) -> bool;
    /// Apply an edge's halving and saturation.
    fn requantize(self, shift: u32, clip: i64, saturations: &mut u64) -> Self;
}

impl Llr for i32 {
    #[inline]
    fn zero() -> Self {
        0
    }
    #[inline]
    fn magnitude(self) -> Self {
        self.abs()
    }
    #[inline]
    fn is_negative(self) -> bool {
        self < 0
    }
    #[inline]
    fn f(a: Self, b: Self) -> Self {
        let m = a.abs().min(b.abs());
        if (a ^ b) < 0 {
            -m
        } else {
            m
        }
    }
    #[inline]
    fn g(a: Self, b: Self, bit: u8) -> Self {
        if bit == 0 {
            b + a
        } else {
            b - a
        }
    }
    #[inline]
    fn sum_is_negative(values: &[Self]) -> bool {
        values.iter().map(|&v| v as i64).sum::<i64>() < 0
    }
    #[inline]
    fn requantize(self, shift: u32, clip: i64, saturations: &mut u64) -> Self {
        // planned sets are all even before each halving, so the shift is exact
        let v = self >> shift;
        let clip = clip.min(i32::MAX as i64) as i32;
        if v > clip {
            *saturations += 1;
            clip
        } else if v < -clip {
            *saturations += 1;
            -clip
        } else {
            v
        }
    }
}

impl Llr for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> Self {
        self.abs()
    }
    fn is_negative(self) -> bool {
        self < 0.0
    }
    fn f(a: Self, b: Self) -> Self {
        let m = a.abs().min(b.abs());
        if (a < 0.0) != (b < 0.0) {
            -m
        } else {
            m
        }
    }
    fn g(a: Self, b: Self, bit: u8) -> Self {
        if bit == 0 {
            b + a
        } else {
            b - a
        }
    }
    fn sum_is_negative(values: &[Self]) -> bool {
        values.iter().sum::<f64>() < 0.0
    }
    /// Real-valued decoding is never rescaled or clipped.
    fn requantize(self, _shift: u32, _clip: i64, _saturations: &mut u64) -> Self {
        self
    }
}

#[derive(Clone, Copy, Debug)]
struct CompiledNode {
    len: usize,
    kind: NodeKind,
    shift: u32,
    clip: i64,
}

/// Reusable fast-SSC decoder: owns its scratch memory, so one instance per
/// worker.
#[derive(Clone, Debug)]
pub struct ScDecoder<T: Llr = i32> {
    nodes: Vec<CompiledNode>,
    stack: Vec<T>,
    channel_max: i64,
    saturations: u64,
}

impl<T: Llr> ScDecoder<T> {
    pub fn new(tree: &DecodeTree, plan: &QuantPlan) -> Result<Self> {
        if plan.edges.len() != tree.nodes.len() {
            return Err(Error::Dimension("plan does not belong to this tree".into()));
        }
        let nodes = tree
            .nodes
            .iter()
            .zip(&plan.edges)
            .map(|(node, edge)| CompiledNode {
                len: node.len,
                kind: node.kind,
                shift: edge.shift,
                clip: edge.clip.unwrap_or(i64::MAX),
            })
            .collect();
        Ok(Self {
            nodes,
            stack: vec![T::zero(); 2 * tree.len()],
            channel_max: plan.options.channel.max_abs(),
            saturations: 0,
        })
    }

    /// Decoder for `code` with a fresh tree and plan.
    pub fn for_code(code: &CodeSpec, options: PlanOptions) -> Result<Self> {
        let tree = DecodeTree::build(code);
        let plan = plan_bitwidths(&tree, options);
        Self::new(&tree, &plan)
    }

    pub fn len(&self) -> usize {
        self.nodes[0].len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Channel alphabet magnitude the plan was built for.
    pub fn channel_max(&self) -> i64 {
        self.channel_max
    }

    /// Saturation events since construction or the last reset.
    pub fn saturations(&self) -> u64 {
        self.saturations
    }

    pub fn take_saturations(&mut self) -> u64 {
        std::mem::take(&mut self.saturations)
    }

    /// Decodes `llr` into the codeword estimate `out`.
    pub fn decode(&mut self, llr: &[T], out: &mut [u8]) -> Result<()> {
        let len = self.len();
        if llr.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                found: llr.len(),
            });
        }
        if out.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                found: out.len(),
            });
        }
        self.decode_unchecked(llr, out);
        Ok(())
    }

    /// Like [`ScDecoder::decode`] with lengths already validated.
    #[inline]
    pub(crate) fn decode_unchecked(&mut self, llr: &[T], out: &mut [u8]) {
        let root = self.nodes[0];
        let len = root.len;
        for (dst, &v) in self.stack[..len].iter_mut().zip(llr) {
            *dst = v.requantize(root.shift, root.clip, &mut self.saturations);
        }
        run(&self.nodes, 0, &mut self.stack, out, &mut self.saturations);
    }

    /// Loads the channel values through `map` (e.g. a permutation) without
    /// an intermediate buffer, then decodes.
    #[inline]
    pub(crate) fn decode_gather(&mut self, llr: &[T], gather: &[u32], out: &mut [u8]) {
        let root = self.nodes[0];
        let len = root.len;
        for (dst, &src) in self.stack[..len].iter_mut().zip(gather) {
            *dst = llr[src as usize].requantize(root.shift, root.clip, &mut self.saturations);
        }
        run(&self.nodes, 0, &mut self.stack, out, &mut self.saturations);
    }
}

impl ScDecoder<i32> {
    /// Decodes binary channel outputs (`0 -> +1`, `1 -> -1`).
    pub fn decode_hard(&mut self, received: &[u8], out: &mut [u8]) -> Result<()> {
        let llr: Vec<i32> = received.iter().map(|&b| bit_to_llr(b)).collect();
        self.decode(&llr, out)
    }

    pub fn check_channel(&self, llr: &[i32]) -> Result<()> {
        match llr.iter().find(|v| (v.abs() as i64) > self.channel_max) {
            Some(v) => Err(Error::InvalidParameter(format!(
                "channel LLR {v} is outside the planned alphabet (max {})",
                self.channel_max
            ))),
            None => Ok(()),
        }
    }
}

/// Bit-to-LLR polarity used throughout: bit 0 maps to a positive LLR.
#[inline]
pub fn bit_to_llr(bit: u8) -> i32 {
    1 - 2 * (bit & 1) as i32
}

#[inline]
fn hard(v: impl Llr) -> u8 {
    v.is_negative() as u8
}

fn run<T: Llr>(nodes: &[CompiledNode], id: usize, stack: &mut [T], out: &mut [u8], sat: &mut u64) {
    let node = nodes[id];
    let len = node.len;
    let (inp, rest) = stack.split_at_mut(len);
    let inp = &inp[..len];
    let out = &mut out[..len];
    match node.kind {
        NodeKind::Rate0 => out.fill(0),
        NodeKind::Rate1 => {
            for (o, &v) in out.iter_mut().zip(inp) {
                *o = hard(v);
            }
        }
        NodeKind::Rep => out.fill(T::sum_is_negative(inp) as u8),
        NodeKind::Spc => {
            let mut parity = 0u8;
            let mut min_pos = 0;
            let mut min_mag = inp[0].magnitude();
            for (i, (o, &v)) in out.iter_mut().zip(inp).enumerate() {
                *o = hard(v);
                parity ^= *o;
                let m = v.magnitude();
                if m < min_mag {
                    min_mag = m;
                    min_pos = i;
                }
            }
            out[min_pos] ^= parity;
        }
        NodeKind::Branch { left, right } => {
            let half = len / 2;
            let (a, b) = inp.split_at(half);
            {
                let child = &mut rest[..half];
                for ((c, &x), &y) in child.iter_mut().zip(a).zip(b) {
                    *c = T::f(x, y);
                }
            }
            let (out_l, out_r) = out.split_at_mut(half);
            run(nodes, left, rest, out_l, sat);
            let edge = nodes[right];
            {
                let child = &mut rest[..half];
                for (((c, &x), &y), &bit) in child.iter_mut().zip(a).zip(b).zip(out_l.iter()) {
                    *c = T::g(x, y, bit).requantize(edge.shift, edge.clip, sat);
                }
            }
            run(nodes, right, rest, out_r, sat);
            for (l, &r) in out_l.iter_mut().zip(out_r.iter()) {
                *l ^= r;
            }
        }
    }
}
