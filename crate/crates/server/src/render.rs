//! Plain-text tables for the terminal. Rows are `a | b | c` with no
//! padding so they stay greppable.

use std::fmt::Write;

use memtrace_core::analysis::{Mark, Section, VariableRow, ViewModel};

fn mark(m: Option<Mark>) -> &'static str {
    match m {
        Some(Mark::Created) => " (new)",
        Some(Mark::Changed) => " (changed)",
        None => "",
    }
}

fn var_line(out: &mut String, row: &VariableRow) {
    let _ = write!(out, "{} | {} | {}", row.name, row.type_name, row.display);
    if let Some(addr) = &row.address {
        let _ = write!(out, " | {addr}");
    }
    let _ = writeln!(out, "{}", mark(row.mark));
}

pub fn render_view(view: &ViewModel) -> String {
    let mut out = String::new();
    let state = match (&view.fault, view.finished) {
        (Some(f), _) => format!("fault: {f}"),
        (None, true) => "finished".to_string(),
        (None, false) => "paused".to_string(),
    };
    let _ = writeln!(out, "step {} | line {} | {}", view.step_index, view.line_number, state);

    for section in &view.sections {
        match section {
            Section::Stack { collapsed, frames } => {
                let _ = writeln!(out, "== stack ==");
                if *collapsed {
                    let _ = writeln!(out, "[collapsed]");
                    continue;
                }
                if frames.is_empty() {
                    let _ = writeln!(out, "(empty)");
                }
                for f in frames {
                    let _ = writeln!(out, "-- {} (frame {}, line {}) --", f.function, f.frame_index, f.line);
                    if f.collapsed {
                        let _ = writeln!(out, "[collapsed]");
                        continue;
                    }
                    for row in &f.rows {
                        var_line(&mut out, row);
                    }
                }
            }
            Section::Heap { collapsed, rows } => {
                let _ = writeln!(out, "== heap ==");
                if *collapsed {
                    let _ = writeln!(out, "[collapsed]");
                    continue;
                }
                if rows.is_empty() {
                    let _ = writeln!(out, "(empty)");
                }
                for h in rows {
                    let fields: Vec<String> = h
                        .fields
                        .iter()
                        .map(|f| format!("{}={}{}", f.name, f.display, mark(f.mark)))
                        .collect();
                    let _ = writeln!(out, "{} | {} | {} | {}{}", h.name, h.id, h.type_name, fields.join(", "), mark(h.mark));
                }
            }
            Section::Globals { collapsed, rows } => {
                let _ = writeln!(out, "== globals ==");
                if *collapsed {
                    let _ = writeln!(out, "[collapsed]");
                    continue;
                }
                if rows.is_empty() {
                    let _ = writeln!(out, "(empty)");
                }
                for row in rows {
                    var_line(&mut out, row);
                }
            }
        }
    }
    out
}
