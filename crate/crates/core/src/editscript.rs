//! Tree diffs between before/after ASTs and their rich edit script form.
//!
//! Matching is a fixed two-phase heuristic: identical subtrees are paired
//! bottom-up (largest first) by structural hash, then containers are paired
//! top-down when at least half of the larger side's descendants already map
//! into the other (leaves of equal kind pair directly). Matches whose parent
//! ends up deleted or inserted are dissolved, so DEL/INS regions stay pure;
//! moves are kept only between surviving parents. Same-parent reorders also
//! count as moves — replaying the script must reproduce the after tree, and
//! order changes are invisible to DEL/INS/UPD alone.
//!
//! The serialized form is one action per line:
//!
//! ```text
//! MOV <type> @@ <tokens> @TO@ <type> @@ <tokens> @AT@
//! DEL <type> @@ <tokens> @AT@
//! INS <type> @@ <tokens> @TO@ <type> @@ <tokens> @AT@
//! UPD <type> @@ <tokens> @TO@ <tokens> @AT@
//! ```
//!
//! prefixed by one `---` per nesting level under an enclosing action. For
//! MOV and INS the part after `@TO@` names the destination parent; for MOV
//! the destination tokens are the node's tokens after the change. `@` and
//! `\` inside token text are escaped as `\@` and `\\` so the markers stay
//! unambiguous. The shape key used for clustering is the same text with
//! every token field emptied.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minic::{AstUnit, NodeId, NodeKind};
use crate::util::short_id;

// ---------------------------------------------------------------------------
// Actions (the Grammar-visible form)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    Mov,
    Del,
    Ins,
    Upd,
}

impl ActionKind {
    fn name(self) -> &'static str {
        match self {
            ActionKind::Mov => "MOV",
            ActionKind::Del => "DEL",
            ActionKind::Ins => "INS",
            ActionKind::Upd => "UPD",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditAction {
    pub kind: ActionKind,
    /// Nesting level: number of enclosing actions.
    pub depth: usize,
    pub src_type: String,
    pub src_tokens: String,
    /// Destination node type for MOV/INS.
    pub tgt_type: Option<String>,
    /// New tokens for UPD, destination tokens for MOV/INS.
    pub tgt_tokens: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RichEditScript {
    pub hunk_id: String,
    pub actions: Vec<EditAction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShapeKey {
    pub canonical_text: String,
}

impl ShapeKey {
    pub fn id(&self) -> String {
        short_id(self.canonical_text.as_bytes())
    }
}

// ---------------------------------------------------------------------------
// Matching
// ---------------------------------------------------------------------------

/// Replay-capable diff between two units.
#[derive(Debug, Clone)]
pub struct TreeDiff {
    /// before node -> after node
    pub match_ba: HashMap<NodeId, NodeId>,
    /// after node -> before node
    pub match_ab: HashMap<NodeId, NodeId>,
    pub ops: Vec<DiffOp>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiffOp {
    /// Matched node whose label changed.
    Upd { before: NodeId, after: NodeId },
    /// Root of a maximal removed region in the before tree.
    Del { before: NodeId },
    /// Root of a maximal inserted region; `parent_before` is the match
    /// partner of its after-parent, `index` its final child position.
    Ins {
        after: NodeId,
        parent_before: NodeId,
        index: usize,
    },
    /// Matched node that changed parent or sibling position.
    Mov {
        before: NodeId,
        after: NodeId,
        parent_before: NodeId,
        index: usize,
    },
}

struct Matcher<'a> {
    before: &'a AstUnit,
    after: &'a AstUnit,
    ba: HashMap<NodeId, NodeId>,
    ab: HashMap<NodeId, NodeId>,
}

impl<'a> Matcher<'a> {
    fn match_subtrees_exact(&mut self, b: NodeId, a: NodeId) {
        self.ba.insert(b, a);
        self.ab.insert(a, b);
        let bc = self.before.children(b);
        let ac = self.after.children(a);
        debug_assert_eq!(bc.len(), ac.len());
        for (&cb, &ca) in bc.iter().zip(ac.iter()) {
            self.match_subtrees_exact(cb, ca);
        }
    }

    /// Phase 1: pair identical subtrees, largest first.
    fn exact_pass(&mut self) {
        let mut by_hash: HashMap<u64, Vec<NodeId>> = HashMap::new();
        for b in self.before.descendants(self.before.root) {
            by_hash.entry(self.before.structural_hash(b)).or_default().push(b);
        }
        let mut after_nodes = self.after.descendants(self.after.root);
        after_nodes.sort_by_key(|&a| std::cmp::Reverse(self.after.subtree_size(a)));
        for a in after_nodes {
            if self.ab.contains_key(&a) {
                continue;
            }
            let h = self.after.structural_hash(a);
            let Some(cands) = by_hash.get(&h) else { continue };
            let pick = cands.iter().copied().find(|&b| {
                !self.ba.contains_key(&b) && self.before.structural_eq(b, self.after, a)
            });
            if let Some(b) = pick {
                self.match_subtrees_exact(b, a);
            }
        }
    }

    /// Descendant-overlap ratio: the share of the smaller side's proper
    /// descendants whose matches land in the other subtree. Leaves of equal
    /// kind pair with ratio 1.
    fn overlap(&self, b: NodeId, a: NodeId) -> f64 {
        let db = self.before.descendants(b);
        let da_len = self.after.subtree_size(a) - 1;
        let db_len = db.len() - 1;
        if db_len == 0 && da_len == 0 {
            return 1.0;
        }
        if db_len == 0 || da_len == 0 {
            return 0.0;
        }
        let common = db
            .iter()
            .skip(1)
            .filter(|&&d| {
                self.ba
                    .get(&d)
                    .map(|&m| self.after.contains(a, m))
                    .unwrap_or(false)
            })
            .count();
        common as f64 / db_len.min(da_len) as f64
    }

    /// Phase 2: walk matched pairs, pairing similar unmatched children.
    /// When overlap is inconclusive but exactly one child of a kind is
    /// unmatched on each side, that unique pair matches anyway (recovery for
    /// small containers whose leaves all changed).
    fn container_pass(&mut self, b: NodeId, a: NodeId) {
        let bc: Vec<NodeId> = self.before.children(b).to_vec();
        let ac: Vec<NodeId> = self.after.children(a).to_vec();
        for &cb in &bc {
            if self.ba.contains_key(&cb) {
                continue;
            }
            let mut best: Option<(NodeId, f64)> = None;
            for &ca in &ac {
                if self.ab.contains_key(&ca) || self.after.node(ca).kind != self.before.node(cb).kind
                {
                    continue;
                }
                let score = self.overlap(cb, ca);
                if score >= 0.5 && best.map(|(_, s)| score > s).unwrap_or(true) {
                    best = Some((ca, score));
                }
            }
            if let Some((ca, _)) = best {
                self.ba.insert(cb, ca);
                self.ab.insert(ca, cb);
            }
        }
        // unique-pair recovery per node kind
        let kinds: std::collections::BTreeSet<NodeKind> = bc
            .iter()
            .filter(|&&cb| !self.ba.contains_key(&cb))
            .map(|&cb| self.before.node(cb).kind)
            .collect();
        for kind in kinds {
            let unmatched_b: Vec<NodeId> = bc
                .iter()
                .copied()
                .filter(|&cb| !self.ba.contains_key(&cb) && self.before.node(cb).kind == kind)
                .collect();
            let unmatched_a: Vec<NodeId> = ac
                .iter()
                .copied()
                .filter(|&ca| !self.ab.contains_key(&ca) && self.after.node(ca).kind == kind)
                .collect();
            if let ([cb], [ca]) = (unmatched_b.as_slice(), unmatched_a.as_slice()) {
                self.ba.insert(*cb, *ca);
                self.ab.insert(*ca, *cb);
            }
        }
        // recurse through child pairs
        for &cb in &bc {
            if let Some(&ca) = self.ba.get(&cb).copied().filter(|ca| ac.contains(ca)).as_ref() {
                self.container_pass(cb, ca);
            }
        }
    }

    /// Phase 3: dissolve matches living inside removed or inserted regions.
    fn purity_pass(&mut self) {
        loop {
            let mut drop: Vec<(NodeId, NodeId)> = Vec::new();
            for (&b, &a) in &self.ba {
                if b == self.before.root {
                    continue;
                }
                let pb = parent_of(self.before, b);
                let pa = parent_of(self.after, a);
                let pb_matched = pb.map(|p| self.ba.contains_key(&p)).unwrap_or(true);
                let pa_matched = pa.map(|p| self.ab.contains_key(&p)).unwrap_or(true);
                if !pb_matched || !pa_matched {
                    drop.push((b, a));
                }
            }
            if drop.is_empty() {
                break;
            }
            for (b, a) in drop {
                self.ba.remove(&b);
                self.ab.remove(&a);
            }
        }
    }
}

fn parent_of(unit: &AstUnit, id: NodeId) -> Option<NodeId> {
    // Linear scan is fine: fragments are small.
    unit.nodes
        .iter()
        .position(|n| n.children.contains(&id))
}

/// Longest increasing subsequence; returns the indices that stay put.
fn lis_indices(seq: &[usize]) -> Vec<usize> {
    if seq.is_empty() {
        return Vec::new();
    }
    let mut tails: Vec<usize> = Vec::new(); // positions into seq
    let mut prev = vec![usize::MAX; seq.len()];
    for (i, &v) in seq.iter().enumerate() {
        let pos = tails.partition_point(|&t| seq[t] < v);
        if pos > 0 {
            prev[i] = tails[pos - 1];
        }
        if pos == tails.len() {
            tails.push(i);
        } else {
            tails[pos] = i;
        }
    }
    let mut out = Vec::new();
    let mut cur = *tails.last().unwrap();
    loop {
        out.push(cur);
        if prev[cur] == usize::MAX {
            break;
        }
        cur = prev[cur];
    }
    out.reverse();
    out
}

/// Compute the tree diff between two parsed units.
pub fn diff_units(before: &AstUnit, after: &AstUnit) -> TreeDiff {
    let mut m = Matcher {
        before,
        after,
        ba: HashMap::new(),
        ab: HashMap::new(),
    };
    m.exact_pass();
    // Roots always correspond.
    m.ba.insert(before.root, after.root);
    m.ab.insert(after.root, before.root);
    m.container_pass(before.root, after.root);
    m.purity_pass();
    if !m.ba.contains_key(&before.root) {
        m.ba.insert(before.root, after.root);
        m.ab.insert(after.root, before.root);
    }

    let mut ops = Vec::new();

    // UPD, DEL, MOV in before pre-order.
    for b in before.descendants(before.root) {
        match m.ba.get(&b) {
            None => {
                let pb = parent_of(before, b);
                let covered = pb.map(|p| !m.ba.contains_key(&p)).unwrap_or(false);
                if !covered {
                    ops.push(DiffOp::Del { before: b });
                }
            }
            Some(&a) => {
                if before.node(b).label != after.node(a).label {
                    ops.push(DiffOp::Upd { before: b, after: a });
                }
                if b == before.root {
                    continue;
                }
                let pb = parent_of(before, b).expect("matched non-root has a parent");
                let pa = parent_of(after, a).expect("matched non-root has a parent");
                let moved_across = m.ba.get(&pb) != Some(&pa);
                if moved_across {
                    let parent_before = *m.ab.get(&pa).expect("after parent is matched");
                    let index = after.children(pa).iter().position(|&c| c == a).unwrap();
                    ops.push(DiffOp::Mov {
                        before: b,
                        after: a,
                        parent_before,
                        index,
                    });
                }
            }
        }
    }

    // Same-parent reorders: for each matched parent, children matched into the
    // same partner must keep their relative order; the rest move.
    let pairs: Vec<(NodeId, NodeId)> = m.ba.iter().map(|(&b, &a)| (b, a)).collect();
    let mut pairs_sorted = pairs.clone();
    pairs_sorted.sort();
    for (pb, pa) in pairs_sorted {
        let stayed: Vec<(NodeId, NodeId)> = before
            .children(pb)
            .iter()
            .filter_map(|&cb| {
                let &ca = m.ba.get(&cb)?;
                (parent_of(after, ca) == Some(pa)).then_some((cb, ca))
            })
            .collect();
        if stayed.len() < 2 {
            continue;
        }
        let after_positions: Vec<usize> = stayed
            .iter()
            .map(|&(_, ca)| after.children(pa).iter().position(|&c| c == ca).unwrap())
            .collect();
        let keep = lis_indices(&after_positions);
        for (i, &(cb, ca)) in stayed.iter().enumerate() {
            if !keep.contains(&i) {
                let index = after.children(pa).iter().position(|&c| c == ca).unwrap();
                ops.push(DiffOp::Mov {
                    before: cb,
                    after: ca,
                    parent_before: pb,
                    index,
                });
            }
        }
    }

    // INS at the roots of inserted regions, in after pre-order.
    for a in after.descendants(after.root) {
        if m.ab.contains_key(&a) {
            continue;
        }
        let pa = parent_of(after, a);
        let covered = pa.map(|p| !m.ab.contains_key(&p)).unwrap_or(false);
        if covered {
            continue;
        }
        let pa = pa.expect("unmatched root is impossible");
        let parent_before = *m.ab.get(&pa).unwrap();
        let index = after.children(pa).iter().position(|&c| c == a).unwrap();
        ops.push(DiffOp::Ins {
            after: a,
            parent_before,
            index,
        });
    }

    TreeDiff {
        match_ba: m.ba,
        match_ab: m.ab,
        ops,
    }
}

// ---------------------------------------------------------------------------
// Action rendering
// ---------------------------------------------------------------------------

impl TreeDiff {
    /// Grammar-form actions: DEL/UPD/MOV in before pre-order (a DEL that
    /// replaces a sibling carries its paired INS nested one level deeper),
    /// then remaining INS in after pre-order.
    pub fn actions(&self, before: &AstUnit, after: &AstUnit) -> Vec<EditAction> {
        // Replacement pairing: i-th removed region root and i-th inserted
        // region root under the same matched parent.
        let mut ins_by_parent: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        for op in &self.ops {
            if let DiffOp::Ins { after: a, parent_before, .. } = op {
                ins_by_parent.entry(*parent_before).or_default().push(*a);
            }
        }
        let mut del_seq: HashMap<NodeId, usize> = HashMap::new(); // parent -> count
        let mut paired: HashMap<NodeId, NodeId> = HashMap::new(); // del before -> ins after
        for op in &self.ops {
            if let DiffOp::Del { before: b } = op {
                if let Some(pb) = parent_of(before, *b) {
                    let k = *del_seq.entry(pb).or_insert(0);
                    del_seq.insert(pb, k + 1);
                    if let Some(cands) = ins_by_parent.get(&pb) {
                        if let Some(&a) = cands.get(k) {
                            paired.insert(*b, a);
                        }
                    }
                }
            }
        }
        let paired_ins: std::collections::HashSet<NodeId> = paired.values().copied().collect();

        // Depth = number of proper ancestors carrying an action.
        let acted_before: std::collections::HashSet<NodeId> = self
            .ops
            .iter()
            .filter_map(|op| match op {
                DiffOp::Del { before } | DiffOp::Upd { before, .. } | DiffOp::Mov { before, .. } => {
                    Some(*before)
                }
                DiffOp::Ins { .. } => None,
            })
            .collect();
        let depth_before = |unit: &AstUnit, mut n: NodeId| -> usize {
            let mut d = 0;
            while let Some(p) = parent_of(unit, n) {
                if acted_before.contains(&p) {
                    d += 1;
                }
                n = p;
            }
            d
        };

        let mut out = Vec::new();
        let mut pending_ins: Vec<(NodeId, usize)> = Vec::new(); // (after id, depth)

        for b in before.descendants(before.root) {
            for op in &self.ops {
                match op {
                    DiffOp::Upd { before: ob, after: oa } if *ob == b => {
                        out.push(EditAction {
                            kind: ActionKind::Upd,
                            depth: depth_before(before, b),
                            src_type: before.node(b).kind.name().to_string(),
                            src_tokens: before.node_tokens(b),
                            tgt_type: None,
                            tgt_tokens: Some(after.node_tokens(*oa)),
                        });
                    }
                    DiffOp::Del { before: ob } if *ob == b => {
                        let d = depth_before(before, b);
                        out.push(EditAction {
                            kind: ActionKind::Del,
                            depth: d,
                            src_type: before.node(b).kind.name().to_string(),
                            src_tokens: before.node_tokens(b),
                            tgt_type: None,
                            tgt_tokens: None,
                        });
                        if let Some(&a) = paired.get(&b) {
                            out.push(ins_action(after, a, d + 1, self, before));
                        }
                    }
                    DiffOp::Mov { before: ob, after: oa, .. } if *ob == b => {
                        let pa = parent_of(after, *oa).unwrap();
                        out.push(EditAction {
                            kind: ActionKind::Mov,
                            depth: depth_before(before, b),
                            src_type: before.node(b).kind.name().to_string(),
                            src_tokens: before.node_tokens(b),
                            tgt_type: Some(after.node(pa).kind.name().to_string()),
                            tgt_tokens: Some(after.node_tokens(*oa)),
                        });
                    }
                    _ => {}
                }
            }
        }
        for a in after.descendants(after.root) {
            if paired_ins.contains(&a) {
                continue;
            }
            if self
                .ops
                .iter()
                .any(|op| matches!(op, DiffOp::Ins { after: oa, .. } if *oa == a))
            {
                pending_ins.push((a, 0));
            }
        }
        for (a, d) in pending_ins {
            out.push(ins_action(after, a, d, self, before));
        }
        out
    }
}

fn ins_action(
    after: &AstUnit,
    a: NodeId,
    depth: usize,
    diff: &TreeDiff,
    before: &AstUnit,
) -> EditAction {
    let pa = parent_of(after, a);
    let (tgt_type, tgt_tokens) = match pa {
        Some(p) => (
            after.node(p).kind.name().to_string(),
            after.node_tokens(p),
        ),
        None => ("TranslationUnit".to_string(), String::new()),
    };
    let _ = (diff, before);
    EditAction {
        kind: ActionKind::Ins,
        depth,
        src_type: after.node(a).kind.name().to_string(),
        src_tokens: after.node_tokens(a),
        tgt_type: Some(tgt_type),
        tgt_tokens: Some(tgt_tokens),
    }
}

/// Convenience: tree-diff two units and return Grammar-form actions.
pub fn diff_trees(before: &AstUnit, after: &AstUnit) -> Vec<EditAction> {
    diff_units(before, after).actions(before, after)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('@', "\\@")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some(e) => out.push(e),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn serialize_action(a: &EditAction, elide_tokens: bool) -> String {
    let tok = |s: &str| if elide_tokens { String::new() } else { escape(s) };
    let mut line = "--- ".repeat(a.depth);
    line.push_str(a.kind.name());
    line.push(' ');
    line.push_str(&a.src_type);
    line.push_str(" @@ ");
    line.push_str(&tok(&a.src_tokens));
    match a.kind {
        ActionKind::Del => {}
        ActionKind::Upd => {
            line.push_str(" @TO@ ");
            line.push_str(&tok(a.tgt_tokens.as_deref().unwrap_or("")));
        }
        ActionKind::Mov | ActionKind::Ins => {
            line.push_str(" @TO@ ");
            line.push_str(a.tgt_type.as_deref().unwrap_or(""));
            line.push_str(" @@ ");
            line.push_str(&tok(a.tgt_tokens.as_deref().unwrap_or("")));
        }
    }
    line.push_str(" @AT@");
    line
}

/// Serialize actions to the rich edit script text form.
pub fn serialize_script(actions: &[EditAction]) -> String {
    let mut out = String::new();
    for a in actions {
        out.push_str(&serialize_action(a, false));
        out.push('\n');
    }
    out
}

/// Parse the text form back into actions.
pub fn parse_script(text: &str) -> Result<Vec<EditAction>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| Error::ScriptParse {
            line: lineno + 1,
            msg: msg.to_string(),
        };
        let mut rest = raw;
        let mut depth = 0;
        while let Some(r) = rest.strip_prefix("--- ") {
            depth += 1;
            rest = r;
        }
        let (kind_word, r) = rest.split_once(' ').ok_or_else(|| err("missing action kind"))?;
        let kind = match kind_word {
            "MOV" => ActionKind::Mov,
            "DEL" => ActionKind::Del,
            "INS" => ActionKind::Ins,
            "UPD" => ActionKind::Upd,
            other => return Err(err(&format!("unknown action kind {other:?}"))),
        };
        let (type_word, r) = r.split_once(" @@ ").ok_or_else(|| err("missing `@@`"))?;
        if NodeKind::from_name(type_word).is_none() {
            return Err(err(&format!("unknown node type {type_word:?}")));
        }
        let body = r.strip_suffix(" @AT@").ok_or_else(|| err("missing `@AT@`"))?;
        let action = match kind {
            ActionKind::Del => EditAction {
                kind,
                depth,
                src_type: type_word.to_string(),
                src_tokens: unescape(body),
                tgt_type: None,
                tgt_tokens: None,
            },
            ActionKind::Upd => {
                let (src, tgt) = body.split_once(" @TO@ ").ok_or_else(|| err("missing `@TO@`"))?;
                EditAction {
                    kind,
                    depth,
                    src_type: type_word.to_string(),
                    src_tokens: unescape(src),
                    tgt_type: None,
                    tgt_tokens: Some(unescape(tgt)),
                }
            }
            ActionKind::Mov | ActionKind::Ins => {
                let (src, tgt) = body.split_once(" @TO@ ").ok_or_else(|| err("missing `@TO@`"))?;
                let (tgt_type, tgt_tok) =
                    tgt.split_once(" @@ ").ok_or_else(|| err("missing target `@@`"))?;
                if NodeKind::from_name(tgt_type).is_none() {
                    return Err(err(&format!("unknown node type {tgt_type:?}")));
                }
                EditAction {
                    kind,
                    depth,
                    src_type: type_word.to_string(),
                    src_tokens: unescape(src),
                    tgt_type: Some(tgt_type.to_string()),
                    tgt_tokens: Some(unescape(tgt_tok)),
                }
            }
        };
        out.push(action);
    }
    Ok(out)
}

/// Token-elided canonical form used as the exact clustering key.
pub fn shape_key(actions: &[EditAction]) -> ShapeKey {
    let mut text = String::new();
    for a in actions {
        text.push_str(&serialize_action(a, true));
        text.push('\n');
    }
    ShapeKey {
        canonical_text: text,
    }
}

// ---------------------------------------------------------------------------
// Replay (verification interpreter)
// ---------------------------------------------------------------------------

/// Structure-only tree used to verify that replaying a diff reproduces the
/// after tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleTree {
    pub kind: NodeKind,
    pub label: String,
    pub children: Vec<SimpleTree>,
}

impl SimpleTree {
    pub fn from_unit(unit: &AstUnit, id: NodeId) -> SimpleTree {
        let n = unit.node(id);
        SimpleTree {
            kind: n.kind,
            label: n.label.clone(),
            children: n.children.iter().map(|&c| Self::from_unit(unit, c)).collect(),
        }
    }
}

/// Mutable arena mirror of the before tree, indexed by before node ids.
struct ReplayState {
    kinds: HashMap<NodeId, NodeKind>,
    labels: HashMap<NodeId, String>,
    children: HashMap<NodeId, Vec<ReplayRef>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum ReplayRef {
    Before(NodeId),
    Fresh(usize),
}

/// Apply diff ops to the before tree and return the result. The after unit is
/// consulted only for inserted subtree content and updated labels, never for
/// placement.
pub fn replay(before: &AstUnit, after: &AstUnit, diff: &TreeDiff) -> SimpleTree {
    let mut st = ReplayState {
        kinds: HashMap::new(),
        labels: HashMap::new(),
        children: HashMap::new(),
    };
    for id in before.descendants(before.root) {
        let n = before.node(id);
        st.kinds.insert(id, n.kind);
        st.labels.insert(id, n.label.clone());
        st.children
            .insert(id, n.children.iter().map(|&c| ReplayRef::Before(c)).collect());
    }
    let mut fresh: Vec<SimpleTree> = Vec::new();

    // 1. relabel
    for op in &diff.ops {
        if let DiffOp::Upd { before: b, after: a } = op {
            st.labels.insert(*b, after.node(*a).label.clone());
        }
    }
    // 2. detach moved subtrees and deleted regions
    let detach = |st: &mut ReplayState, target: &ReplayRef| {
        for children in st.children.values_mut() {
            if let Some(pos) = children.iter().position(|c| c == target) {
                children.remove(pos);
                return;
            }
        }
    };
    for op in &diff.ops {
        match op {
            DiffOp::Mov { before: b, .. } | DiffOp::Del { before: b } => {
                detach(&mut st, &ReplayRef::Before(*b));
            }
            _ => {}
        }
    }
    // 3. inserts in ascending final-position order
    let mut inserts: Vec<(NodeId, usize, ReplayRef)> = Vec::new();
    for op in &diff.ops {
        match op {
            DiffOp::Mov {
                before: b,
                parent_before,
                index,
                ..
            } => inserts.push((*parent_before, *index, ReplayRef::Before(*b))),
            DiffOp::Ins {
                after: a,
                parent_before,
                index,
            } => {
                fresh.push(SimpleTree::from_unit(after, *a));
                inserts.push((*parent_before, *index, ReplayRef::Fresh(fresh.len() - 1)));
            }
            _ => {}
        }
    }
    inserts.sort_by_key(|&(p, i, _)| (p, i));
    for (parent, index, r) in inserts {
        let children = st.children.get_mut(&parent).expect("insert target exists");
        let at = index.min(children.len());
        children.insert(at, r);
    }

    fn build(st: &ReplayState, fresh: &[SimpleTree], r: &ReplayRef) -> SimpleTree {
        match r {
            ReplayRef::Fresh(i) => fresh[*i].clone(),
            ReplayRef::Before(id) => SimpleTree {
                kind: st.kinds[id],
                label: st.labels[id].clone(),
                children: st.children[id]
                    .iter()
                    .map(|c| build(st, fresh, c))
                    .collect(),
            },
        }
    }
    build(&st, &fresh, &ReplayRef::Before(before.root))
}
