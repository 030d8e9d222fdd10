//! Fixed-field MPS writer and a whitespace-tolerant reader.
//!
//! Names longer than eight characters overflow their field; the reader splits
//! on whitespace so such files still round-trip. Numbers use the shortest
//! representation that parses back to the identical `f64`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::model::{Sense, StandardFormModel};

const OBJ_ROW: &str = "COST";

fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Data line: type field (cols 2–3), then name / value pairs at the fixed
/// offsets 5, 15, 25.
fn line(out: &mut String, kind: &str, a: &str, b: &str, value: &str) {
    let _ = writeln!(out, " {kind:<2} {a:<8}  {b:<8}  {value}");
}

pub fn write_mps(model: &StandardFormModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", if model.name.is_empty() { "MODEL" } else { &model.name });
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for r in &model.rows {
        let code = match r.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        let _ = writeln!(out, " {code:<2} {}", r.name);
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.n_vars()];
    for (ri, r) in model.rows.iter().enumerate() {
        for &(j, a) in &r.coeffs {
            by_col[j].push((ri, a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut markers = 0;
    for (j, v) in model.vars.iter().enumerate() {
        if v.integer != in_int {
            let tag = if v.integer { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    M{markers:<7}  'MARKER'                 {tag}");
            markers += 1;
            in_int = v.integer;
        }
        let c = model.objective[j];
        let mut wrote = false;
        if c != 0.0 {
            line(&mut out, "", &v.name, OBJ_ROW, &num(c));
            wrote = true;
        }
        for &(ri, a) in &by_col[j] {
            line(&mut out, "", &v.name, &model.rows[ri].name, &num(a));
            wrote = true;
        }
        if !wrote {
            // keep the column declared even when it has no entries
            line(&mut out, "", &v.name, OBJ_ROW, "0.0");
        }
    }
    if in_int {
        let _ = writeln!(out, "    M{markers:<7}  'MARKER'                 'INTEND'");
    }

    out.push_str("RHS\n");
    for r in &model.rows {
        if r.rhs != 0.0 {
            line(&mut out, "", "RHS", &r.name, &num(r.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for v in &model.vars {
        let (lb, ub) = (v.lb, v.ub);
        if lb == ub {
            line(&mut out, "FX", "BND", &v.name, &num(lb));
            continue;
        }
        match (lb == f64::NEG_INFINITY, ub == f64::INFINITY) {
            (true, true) => line(&mut out, "FR", "BND", &v.name, ""),
            (true, false) => {
                line(&mut out, "MI", "BND", &v.name, "");
                line(&mut out, "UP", "BND", &v.name, &num(ub));
            }
            (false, inf_ub) => {
                if lb != 0.0 {
                    line(&mut out, "LO", "BND", &v.name, &num(lb));
                }
                if !inf_ub {
                    line(&mut out, "UP", "BND", &v.name, &num(ub));
                } else if v.integer {
                    // some readers default integer columns to [0, 1]
                    line(&mut out, "PL", "BND", &v.name, "");
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    // trailing blanks from empty value fields are noise
    out.lines().map(|l| l.trim_end().to_string() + "\n").collect()
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::Parse { line, detail: format!("bad number {tok:?}") })
}

pub fn read_mps(text: &str) -> Result<StandardFormModel> {
    let mut model = StandardFormModel::new("");
    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut integer = false;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut ub_set: Vec<bool> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let ln = k + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match toks[0] {
                "NAME" => {
                    model.name = toks.get(1).unwrap_or(&"").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => break,
                "RANGES" | "OBJSENSE" | "SOS" | "QUADOBJ" => {
                    return Err(Error::Parse { line: ln, detail: format!("unsupported section {}", toks[0]) })
                }
                other => return Err(Error::Parse { line: ln, detail: format!("unknown section {other}") }),
            };
            continue;
        }
        match section {
            Section::Rows => {
                let [kind, name] = toks[..] else {
                    return Err(Error::Parse { line: ln, detail: "ROWS entry needs type and name".into() });
                };
                let sense = match kind {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(name.to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(Error::Parse { line: ln, detail: format!("bad row type {kind}") }),
                };
                row_index.insert(name.to_string(), model.rows.len());
                model.add_row(name, Vec::new(), sense, 0.0);
            }
            Section::Columns => {
                if toks.get(1) == Some(&"'MARKER'") {
                    integer = match toks.get(2) {
                        Some(&"'INTORG'") => true,
                        Some(&"'INTEND'") => false,
                        _ => return Err(Error::Parse { line: ln, detail: "bad MARKER line".into() }),
                    };
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(Error::Parse { line: ln, detail: "COLUMNS entry needs 3 or 5 fields".into() });
                }
                let name = toks[0];
                let j = match col_index.get(name) {
                    Some(&j) => j,
                    None => {
                        // integer columns default to [0, +inf) here, like the writer assumes
                        let j = model.add_var(name, 0.0, f64::INFINITY, integer, 0.0);
                        col_index.insert(name.to_string(), j);
                        ub_set.push(false);
                        j
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let v = parse_num(pair[1], ln)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        model.objective[j] += v;
                    } else {
                        let ri = *row_index
                            .get(pair[0])
                            .ok_or_else(|| Error::Parse { line: ln, detail: format!("unknown row {}", pair[0]) })?;
                        entries.push((ri, j, v));
                    }
                }
            }
            Section::Rhs => {
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(Error::Parse { line: ln, detail: "RHS entry needs 3 or 5 fields".into() });
                }
                for pair in toks[1..].chunks(2) {
                    let v = parse_num(pair[1], ln)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        return Err(Error::Parse { line: ln, detail: "objective constants are not supported".into() });
                    }
                    let ri = *row_index
                        .get(pair[0])
                        .ok_or_else(|| Error::Parse { line: ln, detail: format!("unknown row {}", pair[0]) })?;
                    model.rows[ri].rhs = v;
                }
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return Err(Error::Parse { line: ln, detail: "BOUNDS entry too short".into() });
                }
                let j = *col_index
                    .get(toks[2])
                    .ok_or_else(|| Error::Parse { line: ln, detail: format!("unknown column {}", toks[2]) })?;
                let value = || -> Result<f64> {
                    let tok = toks.get(3).ok_or_else(|| Error::Parse { line: ln, detail: "bound value missing".into() })?;
                    parse_num(tok, ln)
                };
                let var = &mut model.vars[j];
                match toks[0] {
                    "UP" => {
                        let v = value()?;
                        if v < 0.0 && var.lb == 0.0 {
                            var.lb = f64::NEG_INFINITY;
                        }
                        var.ub = v;
                        ub_set[j] = true;
                    }
                    "LO" => var.lb = value()?,
                    "FX" => {
                        let v = value()?;
                        var.lb = v;
                        var.ub = v;
                    }
                    "FR" => {
                        var.lb = f64::NEG_INFINITY;
                        var.ub = f64::INFINITY;
                    }
                    "MI" => var.lb = f64::NEG_INFINITY,
                    "PL" => var.ub = f64::INFINITY,
                    "BV" => {
                        var.lb = 0.0;
                        var.ub = 1.0;
                        var.integer = true;
                    }
                    "LI" => {
                        var.lb = value()?;
                        var.integer = true;
                    }
                    "UI" => {
                        var.ub = value()?;
                        var.integer = true;
                    }
                    other => return Err(Error::Parse { line: ln, detail: format!("bad bound type {other}") }),
                }
            }
            Section::None => return Err(Error::Parse { line: ln, detail: "data outside a section".into() }),
        }
    }
    // rebuild rows through add_row so coefficient order matches the builder
    let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.rows.len()];
    for (ri, j, v) in entries {
        per_row[ri].push((j, v));
    }
    let rows = std::mem::take(&mut model.rows);
    for (r, coeffs) in rows.into_iter().zip(per_row) {
        model.add_row(r.name, coeffs, r.sense, r.rhs);
    }
    model.validate()?;
    Ok(model)
}
