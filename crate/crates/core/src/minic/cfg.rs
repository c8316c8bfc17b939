//! Per-function control-flow graphs and bounded path enumeration.
//!
//! Statements and conditions become nodes between a synthetic Entry and Exit.
//! `if`/`while`/`for` conditions carry true/false out-edges; loop closing
//! edges are flagged as back edges. `continue` inside a `for` flows through
//! the step expression (C semantics) and then back to the header.
//!
//! Statements that can never execute (code after `return`/`break` in the same
//! block) get no CFG node: they lie on no control-flow path.

use super::ast::{AstUnit, NodeId, NodeKind};

pub type CfgId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfgNodeKind {
    Entry,
    Exit,
    /// A straight-line statement.
    Stmt(NodeId),
    /// A branch condition; `owner` is the enclosing if/while/for statement.
    Cond { expr: NodeId, owner: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Seq,
    True,
    False,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CfgEdge {
    pub to: CfgId,
    pub kind: EdgeKind,
    pub back: bool,
}

#[derive(Debug, Clone)]
pub struct CfgNode {
    pub kind: CfgNodeKind,
    pub succs: Vec<CfgEdge>,
}

#[derive(Debug, Clone)]
pub struct Cfg {
    pub func: NodeId,
    pub nodes: Vec<CfgNode>,
    pub entry: CfgId,
    pub exit: CfgId,
}

impl Cfg {
    /// AST node a CFG node stands for (the condition expression for `Cond`).
    pub fn ast_of(&self, id: CfgId) -> Option<NodeId> {
        match self.nodes[id].kind {
            CfgNodeKind::Stmt(n) => Some(n),
            CfgNodeKind::Cond { expr, .. } => Some(expr),
            _ => None,
        }
    }

    /// Owning statement for matching purposes: the statement itself, or the
    /// control statement that owns a condition.
    pub fn owner_stmt(&self, id: CfgId) -> Option<NodeId> {
        match self.nodes[id].kind {
            CfgNodeKind::Stmt(n) => Some(n),
            CfgNodeKind::Cond { owner, .. } => Some(owner),
            _ => None,
        }
    }

    pub fn is_cond(&self, id: CfgId) -> bool {
        matches!(self.nodes[id].kind, CfgNodeKind::Cond { .. })
    }
}

/// Pending edges from already-lowered code into the next node.
type Frontier = Vec<(CfgId, EdgeKind)>;

struct Builder<'a> {
    unit: &'a AstUnit,
    nodes: Vec<CfgNode>,
    /// Break sources of the innermost loops, outermost first.
    break_stack: Vec<Vec<(CfgId, EdgeKind)>>,
    /// Return statements; they all get an edge to Exit at the end.
    returns: Vec<CfgId>,
}

impl<'a> Builder<'a> {
    fn new_node(&mut self, kind: CfgNodeKind) -> CfgId {
        self.nodes.push(CfgNode {
            kind,
            succs: Vec::new(),
        });
        self.nodes.len() - 1
    }

    fn connect(&mut self, frontier: &Frontier, to: CfgId, back: bool) {
        for &(from, kind) in frontier {
            self.nodes[from].succs.push(CfgEdge { to, kind, back });
        }
    }

    fn lower_stmt(&mut self, stmt: NodeId, frontier: Frontier, continue_to: Option<CfgId>) -> Frontier {
        if frontier.is_empty() {
            return frontier; // unreachable statement: no node
        }
        let node = self.unit.node(stmt);
        match node.kind {
            NodeKind::CompoundStmt => {
                let mut f = frontier;
                for &child in &node.children {
                    f = self.lower_stmt(child, f, continue_to);
                }
                f
            }
            NodeKind::IfStmt => {
                let cond = self.new_node(CfgNodeKind::Cond {
                    expr: node.children[0],
                    owner: stmt,
                });
                self.connect(&frontier, cond, false);
                let mut out = self.lower_stmt(node.children[1], vec![(cond, EdgeKind::True)], continue_to);
                if node.children.len() == 3 {
                    out.extend(self.lower_stmt(
                        node.children[2],
                        vec![(cond, EdgeKind::False)],
                        continue_to,
                    ));
                } else {
                    out.push((cond, EdgeKind::False));
                }
                out
            }
            NodeKind::WhileStmt => {
                let header = self.new_node(CfgNodeKind::Cond {
                    expr: node.children[0],
                    owner: stmt,
                });
                self.connect(&frontier, header, false);
                self.break_stack.push(Vec::new());
                let body_out = self.lower_stmt(node.children[1], vec![(header, EdgeKind::True)], Some(header));
                self.connect(&body_out, header, true);
                let mut out = self.break_stack.pop().unwrap();
                out.push((header, EdgeKind::False));
                out
            }
            NodeKind::ForStmt => {
                let init = self.new_node(CfgNodeKind::Stmt(node.children[0]));
                self.connect(&frontier, init, false);
                let header = self.new_node(CfgNodeKind::Cond {
                    expr: node.children[1],
                    owner: stmt,
                });
                self.connect(&vec![(init, EdgeKind::Seq)], header, false);
                let step = self.new_node(CfgNodeKind::Stmt(node.children[2]));
                self.break_stack.push(Vec::new());
                let body_out = self.lower_stmt(node.children[3], vec![(header, EdgeKind::True)], Some(step));
                self.connect(&body_out, step, false);
                self.connect(&vec![(step, EdgeKind::Seq)], header, true);
                let mut out = self.break_stack.pop().unwrap();
                out.push((header, EdgeKind::False));
                out
            }
            NodeKind::ReturnStmt => {
                let n = self.new_node(CfgNodeKind::Stmt(stmt));
                self.connect(&frontier, n, false);
                // the edge to Exit is added by the caller via `returns`
                self.returns.push(n);
                Vec::new()
            }
            NodeKind::BreakStmt => {
                let n = self.new_node(CfgNodeKind::Stmt(stmt));
                self.connect(&frontier, n, false);
                if let Some(top) = self.break_stack.last_mut() {
                    top.push((n, EdgeKind::Seq));
                }
                Vec::new()
            }
            NodeKind::ContinueStmt => {
                let n = self.new_node(CfgNodeKind::Stmt(stmt));
                self.connect(&frontier, n, false);
                if let Some(target) = continue_to {
                    let back = !matches!(self.nodes[target].kind, CfgNodeKind::Stmt(_));
                    self.nodes[n].succs.push(CfgEdge {
                        to: target,
                        kind: EdgeKind::Seq,
                        back,
                    });
                }
                Vec::new()
            }
            _ => {
                let n = self.new_node(CfgNodeKind::Stmt(stmt));
                self.connect(&frontier, n, false);
                vec![(n, EdgeKind::Seq)]
            }
        }
    }
}

// Builder needs a place to stash return nodes; keep it on the struct.
impl<'a> Builder<'a> {
    fn build(unit: &'a AstUnit, func: NodeId) -> Cfg {
        let mut b = Builder {
            unit,
            nodes: Vec::new(),
            break_stack: Vec::new(),
            returns: Vec::new(),
        };
        let entry = b.new_node(CfgNodeKind::Entry);
        let exit = b.new_node(CfgNodeKind::Exit);
        let body = unit.node(func).children[3];
        let out = b.lower_stmt(body, vec![(entry, EdgeKind::Seq)], None);
        b.connect(&out, exit, false);
        for r in std::mem::take(&mut b.returns) {
            b.nodes[r].succs.push(CfgEdge {
                to: exit,
                kind: EdgeKind::Seq,
                back: false,
            });
        }
        Cfg {
            func,
            nodes: b.nodes,
            entry,
            exit,
        }
    }
}

/// Build the control-flow graph of a function definition.
pub fn build_cfg(unit: &AstUnit, func: NodeId) -> Cfg {
    assert_eq!(unit.node(func).kind, NodeKind::FunctionDef);
    Builder::build(unit, func)
}

/// Enumeration limits. Every back edge may be taken at most once per path,
/// so loops contribute their zero- and one-iteration unrollings.
#[derive(Debug, Clone, Copy)]
pub struct PathBudget {
    pub max_paths: usize,
    pub max_len: usize,
}

impl Default for PathBudget {
    fn default() -> Self {
        PathBudget {
            max_paths: 20_000,
            max_len: 512,
        }
    }
}

/// One Entry-to-Exit walk. `edges[i]` labels the hop `nodes[i] -> nodes[i+1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfgPath {
    pub nodes: Vec<CfgId>,
    pub edges: Vec<EdgeKind>,
}

/// All Entry-to-Exit paths under the budget, in deterministic DFS order.
/// Returns `None` when the budget is exhausted.
pub fn enumerate_paths(cfg: &Cfg, budget: PathBudget) -> Option<Vec<CfgPath>> {
    let mut paths = Vec::new();
    let mut nodes = vec![cfg.entry];
    let mut edges = Vec::new();
    let mut used_back: Vec<(CfgId, usize)> = Vec::new();
    if !dfs(cfg, budget, &mut nodes, &mut edges, &mut used_back, &mut paths) {
        return None;
    }
    Some(paths)
}

fn dfs(
    cfg: &Cfg,
    budget: PathBudget,
    nodes: &mut Vec<CfgId>,
    edges: &mut Vec<EdgeKind>,
    used_back: &mut Vec<(CfgId, usize)>,
    paths: &mut Vec<CfgPath>,
) -> bool {
    let cur = *nodes.last().unwrap();
    if cur == cfg.exit {
        if paths.len() >= budget.max_paths {
            return false;
        }
        paths.push(CfgPath {
            nodes: nodes.clone(),
            edges: edges.clone(),
        });
        return true;
    }
    if nodes.len() >= budget.max_len {
        return false;
    }
    for (i, e) in cfg.nodes[cur].succs.iter().enumerate() {
        if e.back {
            if used_back.contains(&(cur, i)) {
                continue;
            }
            used_back.push((cur, i));
        }
        nodes.push(e.to);
        edges.push(e.kind);
        let ok = dfs(cfg, budget, nodes, edges, used_back, paths);
        nodes.pop();
        edges.pop();
        if e.back {
            used_back.pop();
        }
        if !ok {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minic::parse::parse_unit;

    fn cfg_of(src: &str) -> (AstUnit, Cfg) {
        let unit = parse_unit(src, "t.c");
        let f = unit.functions()[0];
        let cfg = build_cfg(&unit, f);
        (unit, cfg)
    }

    fn paths_of(cfg: &Cfg) -> Vec<CfgPath> {
        enumerate_paths(cfg, PathBudget::default()).unwrap()
    }

    #[test]
    fn straight_line_single_path() {
        let (_, cfg) = cfg_of("void f(void){ a(); b(); }");
        let paths = paths_of(&cfg);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].nodes.len(), 4); // Entry a b Exit
    }

    #[test]
    fn if_else_two_paths() {
        let (_, cfg) = cfg_of("void f(int x){ if (x) a(); else b(); }");
        assert_eq!(paths_of(&cfg).len(), 2);
    }

    #[test]
    fn if_without_else_two_paths() {
        let (_, cfg) = cfg_of("void f(int x){ if (x) a(); b(); }");
        let paths = paths_of(&cfg);
        assert_eq!(paths.len(), 2);
        // both paths end at b() then Exit
        for p in &paths {
            assert_eq!(*p.nodes.last().unwrap(), cfg.exit);
        }
    }

    #[test]
    fn while_loop_unrolls_once() {
        let (_, cfg) = cfg_of("void f(int x){ while (x) g(); h(); }");
        let paths = paths_of(&cfg);
        assert_eq!(paths.len(), 2); // zero and one iteration
    }

    #[test]
    fn for_loop_has_init_and_step_nodes() {
        let (unit, cfg) = cfg_of("void f(void){ for (i = 0; i < 3; i++) g(); }");
        let stmts = cfg
            .nodes
            .iter()
            .filter(|n| matches!(n.kind, CfgNodeKind::Stmt(_)))
            .count();
        // init, step, body call
        assert_eq!(stmts, 3);
        let conds = cfg.nodes.iter().filter(|n| cfg_is_cond(n)).count();
        assert_eq!(conds, 1);
        let _ = unit;
    }

    fn cfg_is_cond(n: &CfgNode) -> bool {
        matches!(n.kind, CfgNodeKind::Cond { .. })
    }

    #[test]
    fn break_exits_loop() {
        let (_, cfg) = cfg_of("void f(int x){ while (x) { if (x) break; g(); } h(); }");
        let paths = paths_of(&cfg);
        assert!(paths.len() >= 3);
        for p in &paths {
            assert_eq!(*p.nodes.last().unwrap(), cfg.exit);
        }
    }

    #[test]
    fn every_cond_has_true_and_false_edges() {
        let (_, cfg) = cfg_of("void f(int x){ if (x > 0) a(); else b(); while (x) c(); }");
        for n in &cfg.nodes {
            if matches!(n.kind, CfgNodeKind::Cond { .. }) {
                let t = n.succs.iter().filter(|e| e.kind == EdgeKind::True).count();
                let f = n.succs.iter().filter(|e| e.kind == EdgeKind::False).count();
                assert_eq!((t, f), (1, 1));
            }
        }
    }

    #[test]
    fn all_nodes_reachable_from_entry() {
        let (_, cfg) = cfg_of(
            "int f(int x){ if (x) { return 1; } for (i = 0; i < 2; i++) { if (i) continue; g(); } return 0; }",
        );
        let mut seen = vec![false; cfg.nodes.len()];
        let mut stack = vec![cfg.entry];
        while let Some(n) = stack.pop() {
            if seen[n] {
                continue;
            }
            seen[n] = true;
            for e in &cfg.nodes[n].succs {
                stack.push(e.to);
            }
        }
        assert!(seen.iter().all(|&s| s), "unreachable CFG node");
    }

    #[test]
    fn dead_code_after_return_gets_no_node() {
        let (unit, cfg) = cfg_of("int f(void){ return 1; g(); }");
        let stmt_count = cfg
            .nodes
            .iter()
            .filter(|n| matches!(n.kind, CfgNodeKind::Stmt(_)))
            .count();
        assert_eq!(stmt_count, 1);
        let _ = unit;
    }

    #[test]
    fn degenerate_body_is_entry_to_exit() {
        let (_, cfg) = cfg_of("void f(void){ }");
        let paths = paths_of(&cfg);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].nodes, vec![cfg.entry, cfg.exit]);
    }

    #[test]
    fn listing2_else_path_reaches_deref_without_checking_pers() {
        let src = "int get_age(int alive, struct person *pers, char *context){\n\
                   int age=0;\n\
                   if (alive == 1 && pers !=NULL)\n\
                   \x20   age=pers->age_death - pers->age;\n\
                   else\n\
                   \x20   age = pers->age;\n\
                   return age;\n\
                   }\n";
        let (unit, cfg) = cfg_of(src);
        let paths = paths_of(&cfg);
        assert_eq!(paths.len(), 2);
        // the else path visits the condition with a False edge, then the deref
        let else_path = paths
            .iter()
            .find(|p| {
                p.nodes
                    .iter()
                    .zip(p.edges.iter())
                    .any(|(&n, &e)| cfg.is_cond(n) && e == EdgeKind::False)
            })
            .expect("no else path");
        let deref_stmt = else_path
            .nodes
            .iter()
            .filter_map(|&n| cfg.ast_of(n))
            .find(|&a| unit.node_tokens(a).contains("age = pers -> age"));
        assert!(deref_stmt.is_some());
    }
}
