//! Parser for the standard matrix-based case-file format (`mpc.bus`,
//! `mpc.gen`, `mpc.branch` tables). Quantities are converted to per-unit on
//! the system MVA base here and nowhere else.

use super::{Branch, Bus, BusId, BusKind, CaseError, Generator, NetworkCase};
use num_complex::Complex64;

/// Parse case-file text. The case name is taken from the `function mpc = ...`
/// line when present.
pub fn parse_case(text: &str) -> Result<NetworkCase, CaseError> {
    let name = text
        .lines()
        .find_map(|l| {
            let l = l.trim();
            l.strip_prefix("function mpc =")
                .or_else(|| l.strip_prefix("function mpc="))
        })
        .map(|s| s.trim().trim_end_matches(';').to_string())
        .unwrap_or_else(|| "case".to_string());
    parse_case_named(text, &name)
}

/// Parse case-file text with an explicit case name.
pub fn parse_case_named(text: &str, name: &str) -> Result<NetworkCase, CaseError> {
    let mut base_mva = 100.0;
    let mut bus_rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut gen_rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut branch_rows: Vec<(usize, Vec<f64>)> = Vec::new();

    let mut lines = text.lines().enumerate().peekable();
    while let Some((lineno, raw)) = lines.next() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("mpc.baseMVA") {
            let value = rest.trim_start_matches([' ', '=']).trim_end_matches(';');
            base_mva = value.trim().parse().map_err(|_| CaseError::Parse {
                line: lineno + 1,
                message: format!("bad baseMVA value `{value}`"),
            })?;
        } else if line.starts_with("mpc.bus") && !line.starts_with("mpc.bus_name") {
            collect_matrix(line, &mut lines, &mut bus_rows, lineno)?;
        } else if line.starts_with("mpc.gencost") {
            let mut ignored = Vec::new();
            collect_matrix(line, &mut lines, &mut ignored, lineno)?;
        } else if line.starts_with("mpc.gen") {
            collect_matrix(line, &mut lines, &mut gen_rows, lineno)?;
        } else if line.starts_with("mpc.branch") {
            collect_matrix(line, &mut lines, &mut branch_rows, lineno)?;
        }
    }

    if bus_rows.is_empty() {
        return Err(CaseError::Parse {
            line: 0,
            message: "no mpc.bus table found".into(),
        });
    }

    let mut buses = Vec::with_capacity(bus_rows.len());
    for (lineno, row) in &bus_rows {
        if row.len() < 13 {
            return Err(CaseError::Parse {
                line: *lineno + 1,
                message: format!("bus row has {} columns, expected 13", row.len()),
            });
        }
        let id = to_id(row[0], *lineno)?;
        let kind = match row[1] as i64 {
            1 => BusKind::Pq,
            2 => BusKind::Pv,
            3 => BusKind::Slack,
            4 => {
                // Isolated bus; the standard format allows it but this tool
                // has no use for one.
                return Err(CaseError::Parse {
                    line: *lineno + 1,
                    message: format!("bus {id} is marked isolated"),
                });
            }
            other => {
                return Err(CaseError::Parse {
                    line: *lineno + 1,
                    message: format!("bus {id} has unknown type {other}"),
                });
            }
        };
        buses.push(Bus {
            id,
            kind,
            load: Complex64::new(row[2], row[3]) / base_mva,
            shunt: Complex64::new(row[4], row[5]) / base_mva,
            v_min: row[12],
            v_max: row[11],
        });
    }

    let mut generators = Vec::with_capacity(gen_rows.len());
    for (lineno, row) in &gen_rows {
        if row.len() < 8 {
            return Err(CaseError::Parse {
                line: *lineno + 1,
                message: format!("gen row has {} columns, expected at least 8", row.len()),
            });
        }
        if row[7] <= 0.0 {
            continue; // out of service
        }
        generators.push(Generator {
            bus: to_id(row[0], *lineno)?,
            p_set: row[1] / base_mva,
            v_set: row[5],
            q_min: row[4] / base_mva,
            q_max: row[3] / base_mva,
        });
    }

    let mut branches = Vec::with_capacity(branch_rows.len());
    for (lineno, row) in &branch_rows {
        if row.len() < 11 {
            return Err(CaseError::Parse {
                line: *lineno + 1,
                message: format!("branch row has {} columns, expected at least 11", row.len()),
            });
        }
        if row[10] <= 0.0 {
            continue; // out of service
        }
        branches.push(Branch {
            from: to_id(row[0], *lineno)?,
            to: to_id(row[1], *lineno)?,
            impedance: Complex64::new(row[2], row[3]),
            charging: row[4],
            tap: if row[8] == 0.0 { 1.0 } else { row[8] },
            shift_deg: row[9],
        });
    }

    let case = NetworkCase {
        name: name.to_string(),
        base_mva,
        buses,
        branches,
        generators,
    };
    case.validate()?;
    Ok(case)
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn to_id(value: f64, lineno: usize) -> Result<BusId, CaseError> {
    if value < 1.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
        return Err(CaseError::Parse {
            line: lineno + 1,
            message: format!("bad bus number {value}"),
        });
    }
    Ok(BusId(value as u32))
}

/// Accumulate the numeric rows of one `mpc.<table> = [ ... ];` section.
fn collect_matrix<'a>(
    header: &str,
    lines: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'a str)>>,
    rows: &mut Vec<(usize, Vec<f64>)>,
    header_line: usize,
) -> Result<(), CaseError> {
    // Data may start on the header line after '['.
    if let Some(after) = header.split('[').nth(1) {
        let (data, done) = split_matrix_end(after);
        push_rows(data, header_line, rows)?;
        if done {
            return Ok(());
        }
    }
    for (lineno, raw) in lines.by_ref() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let (data, done) = split_matrix_end(line);
        push_rows(data, lineno, rows)?;
        if done {
            return Ok(());
        }
    }
    Err(CaseError::Parse {
        line: header_line + 1,
        message: "unterminated matrix section".into(),
    })
}

fn split_matrix_end(line: &str) -> (&str, bool) {
    match line.find(']') {
        Some(pos) => (&line[..pos], true),
        None => (line, false),
    }
}

fn push_rows(
    data: &str,
    lineno: usize,
    rows: &mut Vec<(usize, Vec<f64>)>,
) -> Result<(), CaseError> {
    for chunk in data.split(';') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in chunk.split_whitespace() {
            let value: f64 = field.parse().map_err(|_| CaseError::Parse {
                line: lineno + 1,
                message: format!("bad numeric field `{field}`"),
            })?;
            row.push(value);
        }
        rows.push((lineno, row));
    }
    Ok(())
}
