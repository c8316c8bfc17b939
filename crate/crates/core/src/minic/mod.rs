//! MiniC front end: lossless tokenizer, recovering parser, printer and
//! per-function control-flow graphs.

pub mod ast;
pub mod cfg;
pub mod lex;
pub mod parse;

pub use ast::{AstNode, AstUnit, NodeId, NodeKind, SourcePos};
pub use cfg::{build_cfg, enumerate_paths, Cfg, CfgId, CfgNodeKind, CfgPath, EdgeKind, PathBudget};
pub use lex::{tokenize, Token, TokenKind, TokenStream};
pub use parse::{parse_fragment, parse_unit, Fragment};

/// Lossless source reconstruction of a parsed unit.
pub fn print_unit(unit: &AstUnit) -> String {
    unit.print()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_print_round_trip() {
        let sources = [
            "",
            "int x;\n",
            "#include <stdio.h>\n",
            "int main(void)\n{\n    int a = 1;   /* one */\n    if (a)\n        return a;\n    return 0;\n}\n",
            "/* header */\nstruct odd { int x; };\nvoid f(char *s) { puts(s); }\n",
            "int f(int a){if(a>0){return a;}else{return -a;}}\n",
        ];
        for src in sources {
            let unit = parse_unit(src, "t.c");
            assert_eq!(print_unit(&unit), src, "round trip failed for {src:?}");
        }
    }

    #[test]
    fn spans_slice_source_exactly() {
        let src = "int f(int a){ return a + 1; }\n";
        let unit = parse_unit(src, "t.c");
        let f = unit.functions()[0];
        let (s, e) = unit.byte_span(f);
        assert_eq!(&src[s..e], "int f(int a){ return a + 1; }");
        let body = unit.node(f).children[3];
        let ret = unit.children(body)[0];
        let (s, e) = unit.byte_span(ret);
        assert_eq!(&src[s..e], "return a + 1;");
    }

    #[test]
    fn determinism_across_runs() {
        let src = "int f(int a){ while (a) a--; return a; }";
        let a = parse_unit(src, "t.c");
        let b = parse_unit(src, "t.c");
        assert_eq!(a.nodes, b.nodes);
        assert!(a.structural_eq(a.root, &b, b.root));
    }
}
