//! Report documents: one structured tree per analysis, rendered to both
//! machine-readable JSON and markdown from the same nodes so the two outputs
//! cannot drift apart.

use serde_json::{Map, Value};

use crate::dynamics::EquationsOfMotion;
use crate::fj_core::AnalysisReport;
use crate::linalg::SymMatrix;
use crate::parser::print_expression;

/// A rendering-agnostic document node. Every variant carries the key it is
/// stored under when the parent section becomes a JSON object.
#[derive(Debug, Clone)]
pub enum Doc {
    Section {
        title: String,
        children: Vec<Doc>,
    },
    KeyValue {
        key: String,
        value: String,
    },
    Table {
        title: String,
        headers: Vec<String>,
        rows: Vec<Vec<String>>,
    },
    List {
        title: String,
        items: Vec<String>,
    },
}

impl Doc {
    fn key(&self) -> &str {
        match self {
            Doc::Section { title, .. } => title,
            Doc::KeyValue { key, .. } => key,
            Doc::Table { title, .. } => title,
            Doc::List { title, .. } => title,
        }
    }

    fn json_value(&self) -> Value {
        match self {
            Doc::Section { children, .. } => {
                let mut map = Map::new();
                for child in children {
                    map.insert(child.key().to_string(), child.json_value());
                }
                Value::Object(map)
            }
            Doc::KeyValue { value, .. } => Value::String(value.clone()),
            Doc::Table { headers, rows, .. } => {
                let mut map = Map::new();
                map.insert(
                    "headers".into(),
                    Value::Array(headers.iter().cloned().map(Value::String).collect()),
                );
                map.insert(
                    "rows".into(),
                    Value::Array(
                        rows.iter()
                            .map(|r| Value::Array(r.iter().cloned().map(Value::String).collect()))
                            .collect(),
                    ),
                );
                Value::Object(map)
            }
            Doc::List { items, .. } => {
                Value::Array(items.iter().cloned().map(Value::String).collect())
            }
        }
    }
}

/// Render the tree as a JSON document with stable key order.
pub fn to_json(doc: &Doc) -> Value {
    let mut map = Map::new();
    map.insert(doc.key().to_string(), doc.json_value());
    Value::Object(map)
}

pub fn to_json_string(doc: &Doc) -> String {
    serde_json::to_string_pretty(&to_json(doc)).expect("string-only tree serializes")
}

fn markdown_into(doc: &Doc, depth: usize, out: &mut String) {
    match doc {
        Doc::Section { title, children } => {
            out.push_str(&format!("{} {}\n\n", "#".repeat(depth.min(6)), title));
            for (k, child) in children.iter().enumerate() {
                markdown_into(child, depth + 1, out);
                let next_is_kv = matches!(children.get(k + 1), Some(Doc::KeyValue { .. }));
                if matches!(child, Doc::KeyValue { .. }) && !next_is_kv {
                    out.push('\n');
                }
            }
        }
        Doc::KeyValue { key, value } => {
            out.push_str(&format!("- **{key}**: {value}\n"));
        }
        Doc::Table {
            title,
            headers,
            rows,
        } => {
            out.push_str(&format!("{} {}\n\n", "#".repeat(depth.min(6)), title));
            out.push_str(&format!("| {} |\n", headers.join(" | ")));
            out.push_str(&format!("|{}\n", " --- |".repeat(headers.len())));
            for row in rows {
                out.push_str(&format!("| {} |\n", row.join(" | ")));
            }
            out.push('\n');
        }
        Doc::List { title, items } => {
            out.push_str(&format!("{} {}\n\n", "#".repeat(depth.min(6)), title));
            for item in items {
                out.push_str(&format!("- {item}\n"));
            }
            out.push('\n');
        }
    }
}

/// Render the tree as markdown.
pub fn to_markdown(doc: &Doc) -> String {
    let mut out = String::new();
    markdown_into(doc, 1, &mut out);
    // key/value runs need a trailing blank line between sections
    if !out.ends_with("\n\n") {
        out.push('\n');
    }
    out
}

fn matrix_table(title: &str, m: &SymMatrix, ctx: &crate::expr::Context) -> Doc {
    let mut headers = vec![String::new()];
    if m.col_labels.len() == m.cols {
        headers.extend(m.col_labels.iter().cloned());
    } else {
        headers.extend((0..m.cols).map(|j| j.to_string()));
    }
    let rows = (0..m.rows)
        .map(|i| {
            let label = if m.row_labels.len() == m.rows {
                m.row_labels[i].clone()
            } else {
                i.to_string()
            };
            let mut row = vec![label];
            row.extend((0..m.cols).map(|j| print_expression(m.at(i, j), ctx)));
            row
        })
        .collect();
    Doc::Table {
        title: title.to_string(),
        headers,
        rows,
    }
}

/// Assemble the full analysis document. `eom` is included when the analysis
/// reached an invertible matrix.
pub fn build_document(report: &AnalysisReport, eom: Option<&EquationsOfMotion>) -> Doc {
    let ctx = &report.system.ctx;
    let mut children = Vec::new();

    children.push(Doc::Section {
        title: "summary".into(),
        children: vec![
            Doc::KeyValue {
                key: "status".into(),
                value: report.status.as_str().into(),
            },
            Doc::KeyValue {
                key: "degrees_of_freedom".into(),
                value: report.dof.to_string(),
            },
            Doc::KeyValue {
                key: "constraints_found".into(),
                value: report.constraints.len().to_string(),
            },
            Doc::KeyValue {
                key: "gauge_generators".into(),
                value: report.gauge_generators.len().to_string(),
            },
            Doc::KeyValue {
                key: "gauge_fixed".into(),
                value: report.gauge_fixed.to_string(),
            },
        ],
    });

    children.push(Doc::List {
        title: "variables".into(),
        items: report
            .system
            .variables
            .iter()
            .map(|&v| format!("{} ({})", ctx.table.name(v), ctx.table.kind(v)))
            .collect(),
    });

    if !report.constraints.is_empty() {
        children.push(Doc::Table {
            title: "constraints".into(),
            headers: vec![
                "label".into(),
                "expression".into(),
                "found_at_iteration".into(),
                "solve_hint".into(),
            ],
            rows: report
                .constraints
                .iter()
                .map(|c| {
                    let hint = match &c.solve_hint {
                        Some(bindings) => bindings
                            .iter()
                            .map(|(s, e)| {
                                format!("{} -> {}", ctx.table.name(*s), print_expression(e, ctx))
                            })
                            .collect::<Vec<_>>()
                            .join("; "),
                        None => "(none)".into(),
                    };
                    vec![
                        c.label.clone(),
                        print_expression(&c.expression, ctx),
                        c.iteration_found.to_string(),
                        hint,
                    ]
                })
                .collect(),
        });
    }

    let mut iteration_children = Vec::new();
    for rec in &report.iterations {
        let mut kids = vec![
            Doc::KeyValue {
                key: "invertible".into(),
                value: rec.invertible.to_string(),
            },
            matrix_table("symplectic_matrix", &rec.symplectic, ctx),
        ];
        for (k, pass) in rec.passes.iter().enumerate() {
            let mode_rows: Vec<Vec<String>> = pass
                .modes
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let mut row = vec![format!("mode {}", i + 1)];
                    row.extend(m.components.iter().map(|e| print_expression(e, ctx)));
                    row
                })
                .collect();
            let mut mode_headers = vec![String::new()];
            mode_headers.extend(pass.stacked.row_labels.iter().cloned());
            kids.push(Doc::Section {
                title: format!("pass {}", k + 1),
                children: vec![
                    Doc::KeyValue {
                        key: "stacked_rows".into(),
                        value: pass.stacked.rows.to_string(),
                    },
                    Doc::Table {
                        title: "zero_modes".into(),
                        headers: mode_headers,
                        rows: mode_rows,
                    },
                    Doc::List {
                        title: "new_constraints".into(),
                        items: pass.new_constraint_labels.clone(),
                    },
                ],
            });
        }
        iteration_children.push(Doc::Section {
            title: format!("iteration {}", rec.iteration),
            children: kids,
        });
    }
    children.push(Doc::Section {
        title: "iterations".into(),
        children: iteration_children,
    });

    if !report.gauge_generators.is_empty() {
        let mut gauge_children = Vec::new();
        gauge_children.push(Doc::Table {
            title: "generators".into(),
            headers: vec!["parameter".into(), "mode".into()],
            rows: report
                .gauge_generators
                .iter()
                .map(|g| {
                    vec![
                        ctx.table.name(g.parameter).to_string(),
                        format!(
                            "({})",
                            g.mode
                                .components
                                .iter()
                                .map(|e| print_expression(e, ctx))
                                .collect::<Vec<_>>()
                                .join(", ")
                        ),
                    ]
                })
                .collect(),
        });
        gauge_children.push(Doc::List {
            title: "transformations".into(),
            items: report
                .gauge_transformations
                .iter()
                .map(|(v, delta)| {
                    format!(
                        "delta {} = {}",
                        ctx.table.name(*v),
                        print_expression(delta, ctx)
                    )
                })
                .collect(),
        });
        if !report.gauge_condition_constraints.is_empty() {
            gauge_children.push(Doc::List {
                title: "gauge_conditions".into(),
                items: report
                    .gauge_condition_constraints
                    .iter()
                    .map(|c| format!("{} = {}", c.label, print_expression(&c.expression, ctx)))
                    .collect(),
            });
        }
        children.push(Doc::Section {
            title: "gauge".into(),
            children: gauge_children,
        });
    }

    children.push(matrix_table("final_matrix", &report.final_matrix, ctx));
    if let Some(inv) = &report.inverse {
        children.push(matrix_table("inverse", inv, ctx));
    }

    if let Some(brackets) = &report.brackets {
        children.push(Doc::Table {
            title: "brackets".into(),
            headers: vec!["left".into(), "right".into(), "value".into()],
            rows: brackets
                .entries
                .iter()
                .map(|e| {
                    vec![
                        ctx.table.name(e.left).to_string(),
                        ctx.table.name(e.right).to_string(),
                        print_expression(&e.value, ctx),
                    ]
                })
                .collect(),
        });
    }

    if let Some(eom) = eom {
        children.push(Doc::List {
            title: "equations_of_motion".into(),
            items: eom
                .variables
                .iter()
                .zip(&eom.rhs)
                .map(|(&v, rhs)| {
                    format!("d{}/dt = {}", ctx.table.name(v), print_expression(rhs, ctx))
                })
                .collect(),
        });
    }

    Doc::Section {
        title: "analysis".into(),
        children,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::derive_eom;
    use crate::fj_core::run_analysis;
    use crate::parser::parse_system;

    const FREE: &str = "[variables]\nq : dynamical\np : momentum\n[parameters]\nm\n\
                        [one_form]\np\n0\n[potential]\np^2/(2*m)\n";

    #[test]
    fn json_and_markdown_come_from_one_tree() {
        let parsed = parse_system(FREE).unwrap();
        let report = run_analysis(&parsed.system, &parsed.options).unwrap();
        let eom = derive_eom(
            report.brackets.as_ref().unwrap(),
            &report.system.potential,
            &report.system,
        );
        let doc = build_document(&report, Some(&eom));
        let json = to_json(&doc);
        let md = to_markdown(&doc);

        let analysis = &json["analysis"];
        assert_eq!(analysis["summary"]["status"], "regular");
        assert_eq!(analysis["summary"]["degrees_of_freedom"], "2");
        assert!(md.contains("# analysis"));
        assert!(md.contains("**status**: regular"));
        assert!(md.contains("d q/dt") || md.contains("dq/dt"));

        // determinism: rebuilding gives identical bytes
        let report2 = run_analysis(&parsed.system, &parsed.options).unwrap();
        let doc2 = build_document(
            &report2,
            Some(&derive_eom(
                report2.brackets.as_ref().unwrap(),
                &report2.system.potential,
                &report2.system,
            )),
        );
        assert_eq!(to_json_string(&doc), to_json_string(&doc2));
        assert_eq!(md, to_markdown(&doc2));
    }
}
