// SPDX-License-Identifier: Apache-2.0

//! HLS-C frontend: parsing, pretty-printing, directive placement and the
//! loop/array metadata consumed by the tuner and the injector.

pub mod ast;
mod emit;
mod lexer;
pub mod metadata;
mod parser;

pub use ast::*;
pub use emit::{emit_ast, emit_decl, emit_expr, emit_pragma, stmt_head};
pub use metadata::{
    accumulation_op, extract_metadata, loop_bounds, value_ops, AccessKind, Affine, ArrayAccess, ArrayInfo, CarriedDep, DepKind,
    DesignMetadata, LoopBounds, LoopInfo,
};
pub use parser::parse_pragma;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {loc}: {message}")]
    Syntax { loc: Loc, message: String },
    #[error("unsupported construct at {loc}: {construct}")]
    Unsupported { loc: Loc, construct: String },
}

impl ParseError {
    pub fn loc(&self) -> Loc {
        match self {
            ParseError::Syntax { loc, .. } | ParseError::Unsupported { loc, .. } => *loc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Corpus,
    User,
    Generated,
}

/// A named piece of HLS-C source text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceUnit {
    pub name: String,
    pub text: String,
    pub origin: Origin,
}

impl SourceUnit {
    pub fn new(name: impl Into<String>, text: impl Into<String>, origin: Origin) -> Self {
        SourceUnit { name: name.into(), text: text.into(), origin }
    }
}

/// Parses a unit. Loop ids are assigned in pre-order and directive lists are
/// stored in canonical order.
pub fn parse(unit: &SourceUnit) -> Result<Ast, ParseError> {
    parse_str(&unit.text)
}

pub fn parse_str(text: &str) -> Result<Ast, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Syntax { loc: Loc::new(1, 1), message: "empty source".into() });
    }
    parser::parse_source(text)
}

/// Pretty-prints `ast` deterministically.
pub fn emit(ast: &Ast, name: &str) -> SourceUnit {
    SourceUnit::new(name, emit_ast(ast), Origin::Generated)
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SiteError {
    #[error("unknown directive site: {0}")]
    UnknownSite(PragmaSite),
}

/// Outcome of [`detach_pragma`].
#[derive(Clone, Debug, PartialEq)]
pub struct Detached {
    pub ast: Ast,
    /// Number of directives removed; zero means the call was a no-op.
    pub removed: usize,
}

impl Detached {
    pub fn is_noop(&self) -> bool {
        self.removed == 0
    }
}

/// Returns a copy of `ast` with `pragma` attached at `site`. Attaching a
/// directive that is already present leaves the tree unchanged.
pub fn attach_pragma(ast: &Ast, site: &PragmaSite, pragma: Pragma) -> Result<Ast, SiteError> {
    let mut out = ast.clone();
    let list = site_pragmas_mut(&mut out, site).ok_or_else(|| SiteError::UnknownSite(site.clone()))?;
    if !list.iter().any(|p| p.kind == pragma.kind) {
        list.push(pragma);
        canonicalize_pragmas(list);
    }
    Ok(out)
}

/// Returns a copy of `ast` without the directives of kind `tag` at `site`.
pub fn detach_pragma(ast: &Ast, site: &PragmaSite, tag: PragmaTag) -> Result<Detached, SiteError> {
    detach_where(ast, site, |p| p.kind.tag() == tag)
}

/// Removes one exact directive (payload included) from `site`.
pub fn detach_exact(ast: &Ast, site: &PragmaSite, kind: &PragmaKind) -> Result<Detached, SiteError> {
    detach_where(ast, site, |p| &p.kind == kind)
}

fn detach_where(ast: &Ast, site: &PragmaSite, pred: impl Fn(&Pragma) -> bool) -> Result<Detached, SiteError> {
    let mut out = ast.clone();
    let list = site_pragmas_mut(&mut out, site).ok_or_else(|| SiteError::UnknownSite(site.clone()))?;
    let before = list.len();
    list.retain(|p| !pred(p));
    let removed = before - list.len();
    Ok(Detached { ast: out, removed })
}

/// Mutable directive list at `site`, if the site exists.
pub fn site_pragmas_mut<'a>(ast: &'a mut Ast, site: &PragmaSite) -> Option<&'a mut Vec<Pragma>> {
    match site {
        PragmaSite::Function(name) => ast.function_mut(name).map(|f| &mut f.pragmas),
        PragmaSite::Loop(id) => ast.functions_mut().find_map(|f| loop_pragmas_in(&mut f.body, *id)),
    }
}

fn loop_pragmas_in(block: &mut Block, id: LoopId) -> Option<&mut Vec<Pragma>> {
    for s in &mut block.stmts {
        if matches!(s, Stmt::For(l) if l.id == id) {
            if let Stmt::For(l) = s {
                return Some(&mut l.pragmas);
            }
        }
        for b in s.child_blocks_mut() {
            if let Some(found) = loop_pragmas_in(b, id) {
                return Some(found);
            }
        }
    }
    None
}

pub fn site_pragmas<'a>(ast: &'a Ast, site: &PragmaSite) -> Option<&'a Vec<Pragma>> {
    match site {
        PragmaSite::Function(name) => ast.function(name).map(|f| &f.pragmas),
        PragmaSite::Loop(id) => ast.find_loop(*id).map(|l| &l.pragmas),
    }
}
