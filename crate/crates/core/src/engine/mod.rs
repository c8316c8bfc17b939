//! Generic-patch matching and application over MiniC units.
//!
//! `match_rule` is the production matcher; `brute_force_match` is an
//! independent reference matcher used as an oracle (same semantics, separate
//! search implementation — see `matching.rs` for the semantics both follow).
//! `apply_rule`/`apply_patchset` turn match sites into concrete patches.

pub mod apply;
pub mod matching;
pub mod oracle;
pub mod semantics;

use std::collections::BTreeMap;

use crate::minic::cfg::PathBudget;
use crate::minic::{build_cfg, enumerate_paths, AstUnit, NodeId};
use crate::patlang::{GenericPatchRule, Quantifier};
use crate::util::short_id;

pub use apply::{apply_patchset, apply_rule, ConcretePatch, PatchsetOutcome, RuleReport};
pub use matching::ResolvedElem;
pub use oracle::brute_force_match;
pub use semantics::{Binding, BoundValue};

/// Match-time limits (path enumeration bounds).
#[derive(Debug, Clone, Copy)]
pub struct MatchConfig {
    pub budget: PathBudget,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            budget: PathBudget::default(),
        }
    }
}

/// One code location a rule matched, with its bindings and witnesses.
#[derive(Debug, Clone)]
pub struct MatchSite {
    pub rule_name: String,
    pub function: NodeId,
    pub function_name: String,
    /// Token range covering every matched context/minus element.
    pub anchor_span: (usize, usize),
    pub binding: Binding,
    /// Indices into the function's canonical path enumeration.
    pub witness_paths: Vec<usize>,
    /// Element sequence with disjunctions resolved and anchors located.
    pub resolved: Vec<ResolvedElem>,
}

impl MatchSite {
    /// Anchor identity: polarity and matched node per concrete element.
    pub fn anchor_key(&self) -> Vec<(bool, NodeId)> {
        self.resolved
            .iter()
            .filter_map(|r| match r {
                ResolvedElem::Minus { node, .. } => Some((true, *node)),
                ResolvedElem::Context { node, .. } => Some((false, *node)),
                _ => None,
            })
            .collect()
    }

    /// Stable digest for reports and candidate identities.
    pub fn digest(&self) -> String {
        let key = format!(
            "{}|{}|{:?}|{}",
            self.rule_name,
            self.function_name,
            self.anchor_key(),
            self.binding.render()
        );
        short_id(key.as_bytes())
    }
}

/// Drop sites that overlap an earlier (source-order) site. Shared by the
/// engine and the oracle so both report the same final set.
pub fn resolve_overlaps(mut sites: Vec<MatchSite>) -> Vec<MatchSite> {
    sites.sort_by(|a, b| {
        a.anchor_span
            .cmp(&b.anchor_span)
            .then_with(|| a.binding.render().cmp(&b.binding.render()))
    });
    let mut kept: Vec<MatchSite> = Vec::new();
    for s in sites {
        let overlaps = kept
            .iter()
            .any(|k| s.anchor_span.0 < k.anchor_span.1 && k.anchor_span.0 < s.anchor_span.1);
        if !overlaps {
            kept.push(s);
        }
    }
    kept
}

/// Match one rule against a parsed unit: all maximal non-overlapping sites
/// in source order. No match is an empty list, never an error.
pub fn match_rule(rule: &GenericPatchRule, unit: &AstUnit, config: &MatchConfig) -> Vec<MatchSite> {
    let items = matching::rule_items(rule);
    let mut sites: Vec<MatchSite> = Vec::new();

    for func in unit.functions() {
        let base_bindings = match &rule.header {
            Some(h) => matching::match_header(unit, h, func),
            None => vec![Binding::new()],
        };
        if base_bindings.is_empty() {
            continue;
        }
        let cfg = build_cfg(unit, func);
        let Some(paths) = enumerate_paths(&cfg, config.budget) else {
            continue; // budget exhausted: this function is out of reach
        };

        // key: (binding render, anchors, choices) -> (site, witnesses)
        let mut grouped: BTreeMap<String, (matching::Embedding, Vec<usize>)> = BTreeMap::new();
        let mut paths_with_embedding = vec![false; paths.len()];
        for (pi, path) in paths.iter().enumerate() {
            for base in &base_bindings {
                for emb in matching::embed_on_path(unit, &cfg, path, &items, base) {
                    paths_with_embedding[pi] = true;
                    let key = format!(
                        "{}|{:?}|{:?}",
                        emb.binding.render(),
                        emb.anchors,
                        emb.choices
                    );
                    grouped
                        .entry(key)
                        .or_insert_with(|| (emb.clone(), Vec::new()))
                        .1
                        .push(pi);
                }
            }
        }
        if grouped.is_empty() {
            continue;
        }
        if rule.quantifier == Quantifier::Forall && !paths_with_embedding.iter().all(|&p| p) {
            continue;
        }

        for (_, (emb, mut witnesses)) in grouped {
            witnesses.sort_unstable();
            witnesses.dedup();
            if rule.quantifier == Quantifier::Forall {
                witnesses = (0..paths.len()).collect();
            }
            let mut resolved = Vec::new();
            matching::resolve_elements(&rule.elements, &[], &emb, &mut resolved);
            let anchor_nodes: Vec<NodeId> = resolved
                .iter()
                .filter_map(|r| match r {
                    ResolvedElem::Minus { node, .. } | ResolvedElem::Context { node, .. } => {
                        Some(*node)
                    }
                    _ => None,
                })
                .collect();
            if anchor_nodes.is_empty() {
                continue;
            }
            let span = (
                anchor_nodes.iter().map(|&n| unit.node(n).tok_start).min().unwrap(),
                anchor_nodes.iter().map(|&n| unit.node(n).tok_end).max().unwrap(),
            );
            sites.push(MatchSite {
                rule_name: rule.name.clone(),
                function: func,
                function_name: unit.function_name(func).to_string(),
                anchor_span: span,
                binding: emb.binding.clone(),
                witness_paths: witnesses,
                resolved,
            });
        }
    }

    resolve_overlaps(sites)
}
