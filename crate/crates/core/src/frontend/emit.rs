//! Renders a program with the tracked types, allocation wrappers and loop
//! and function markers spliced into the original text. Everything not
//! touched by an edit is copied byte for byte.

use super::analysis::{LoopAnnotation, Marker, TrackednessMap};
use super::ast::*;

struct Edit {
    start: usize,
    end: usize,
    text: String,
}

fn tracked_type(ty: Type, marker: Marker) -> Option<String> {
    match (marker, ty) {
        (Marker::Plain, _) => None,
        (Marker::TrackedInt, _) => Some("Num".into()),
        (Marker::TrackedFloat, _) => Some("Double".into()),
        (Marker::TrackedBlock, Type::Ptr(elem)) => Some(format!("DynamicMem<{}>", element_name(elem))),
        (Marker::TrackedBlock, _) => None,
    }
}

fn element_name(elem: Scalar) -> &'static str {
    match elem {
        Scalar::Int => "Num",
        Scalar::Double => "Double",
    }
}

/// Replaces a type written at `span`. A pointer's `*` may hug the declarator
/// (`double *field`), in which case a separating space is kept.
fn type_edit(source: &str, span: Span, replacement: String) -> Edit {
    let mut text = replacement;
    let ends_with_star = source[span.start..span.end].ends_with('*');
    let next = source[span.end..].chars().next();
    if ends_with_star && next.is_some_and(|c| !c.is_whitespace()) {
        text.push(' ');
    }
    Edit {
        start: span.start,
        end: span.end,
        text,
    }
}

pub fn emit_instrumented(program: &Program, map: &TrackednessMap, loops: &[LoopAnnotation]) -> String {
    let src = program.source.as_str();
    let mut edits = Vec::new();
    for f in &program.functions {
        if let Some(t) = tracked_type(f.ret, map.returns(&f.name)) {
            edits.push(type_edit(src, f.ret_span, t));
        }
        edits.push(Edit {
            start: f.body_open.end,
            end: f.body_open.end,
            text: "ENTERFUNCTION".into(),
        });
        edits.push(Edit {
            start: f.body_close.start,
            end: f.body_close.start,
            text: "EXITFUNCTION".into(),
        });
        f.walk(&mut |s| {
            if let StmtKind::For { header, .. } | StmtKind::While { header, .. } = &s.kind {
                if let Some(LoopAnnotation::Trip(trip)) = loops.get(header.id) {
                    edits.push(Edit {
                        start: s.span.start,
                        end: s.span.start,
                        text: format!("LOOP({trip}) "),
                    });
                    edits.push(Edit {
                        start: header.header_end,
                        end: header.header_end,
                        text: " ITERATION".into(),
                    });
                }
            }
            for e in s.exprs() {
                e.walk(&mut |e| {
                    if let ExprKind::Malloc { elem, name_span, .. } = &e.kind {
                        edits.push(Edit {
                            start: name_span.start,
                            end: name_span.end,
                            text: format!("perf_malloc<{}>", element_name(*elem)),
                        });
                    }
                });
            }
        });
    }
    for d in &program.decls {
        if let Some(t) = tracked_type(d.ty, map.marker(d.id)) {
            edits.push(type_edit(src, d.type_span, t));
        }
    }
    edits.sort_by_key(|e| (e.start, e.end));

    let mut out = String::with_capacity(src.len() + 64 * edits.len());
    let mut pos = 0;
    for e in edits {
        out.push_str(&src[pos..e.start]);
        out.push_str(&e.text);
        pos = e.end;
    }
    out.push_str(&src[pos..]);
    out
}
