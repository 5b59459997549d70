//! Byte-stable result serialization: floats at nine significant digits,
//! JSON maps in key order, CSV with `\n` endings and no trailing
//! separator. Fixed inputs produce identical bytes on every run.

use serde_json::Value;

use crate::experiment::{BenchRow, TrialStats};

/// Nine-significant-digit float rendering used by every emitter.
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.8e}")
}

/// Renders a JSON value with sorted object keys, two-space indentation,
/// and all floats at nine significant digits (non-finite floats become
/// null, as JSON requires).
pub fn to_json_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(value: &Value, indent: usize, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else if let Some(f) = n.as_f64() {
                if f.is_finite() {
                    out.push_str(&format_sig9(f));
                } else {
                    out.push_str("null");
                }
            } else {
                out.push_str("null");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap_or_default()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                out.push('\n');
                push_indent(indent + 1, out);
                write_value(item, indent + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
            }
            out.push('\n');
            push_indent(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            // serde_json's map is ordered by key
            for (i, (k, v)) in map.iter().enumerate() {
                out.push('\n');
                push_indent(indent + 1, out);
                out.push_str(&serde_json::to_string(k).unwrap_or_default());
                out.push_str(": ");
                write_value(v, indent + 1, out);
                if i + 1 < map.len() {
                    out.push(',');
                }
            }
            out.push('\n');
            push_indent(indent, out);
            out.push('}');
        }
    }
}

fn push_indent(indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

/// Sweep-statistics CSV under the documented column contract. Wall-clock
/// means are inherently run-dependent, so the runtime column is zeroed
/// unless timing output was requested.
pub fn sweep_csv(rows: &[TrialStats], include_timing: bool) -> String {
    let mut out = String::from(
        "sweep_value,method,outage_rate,energy_mean_j,energy_min_j,energy_max_j,runtime_mean_s,trials\n",
    );
    for r in rows {
        let runtime = if include_timing { r.runtime_mean_s } else { 0.0 };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            format_sig9(r.sweep_value),
            r.method,
            format_sig9(r.outage_rate),
            format_sig9(r.energy_mean_j),
            format_sig9(r.energy_min_j),
            format_sig9(r.energy_max_j),
            format_sig9(runtime),
            r.trials
        ));
    }
    out
}

/// Runtime-benchmark CSV.
pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("k,method,runtime_mean_s,trials\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.k,
            r.method,
            format_sig9(r.runtime_mean_s),
            r.trials
        ));
    }
    out
}

/// Power-curve CSV: speed and propulsion power per row.
pub fn power_curve_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("v,p_fly_w\n");
    for &(v, p) in points {
        out.push_str(&format!("{},{}\n", format_sig9(v), format_sig9(p)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::Method;
    use serde_json::json;

    #[test]
    fn sig9_is_stable_and_nine_digits() {
        assert_eq!(format_sig9(0.0), "0.00000000e0");
        assert_eq!(format_sig9(1.0), "1.00000000e0");
        assert_eq!(format_sig9(48929388.15440442), "4.89293882e7");
        assert_eq!(format_sig9(-0.001), "-1.00000000e-3");
        assert_eq!(format_sig9(f64::NAN), "NaN");
    }

    #[test]
    fn json_sorted_keys_and_stable() {
        let v = json!({"b": 2.5, "a": {"z": [1.0, 2], "y": "s"}, "n": f64::NAN});
        let s1 = to_json_string(&v);
        let s2 = to_json_string(&v);
        assert_eq!(s1, s2);
        let a_pos = s1.find("\"a\"").unwrap();
        let b_pos = s1.find("\"b\"").unwrap();
        assert!(a_pos < b_pos, "keys must be sorted:\n{s1}");
        assert!(s1.contains("null"), "NaN must render as null");
    }

    #[test]
    fn sweep_csv_contract() {
        let rows = vec![TrialStats {
            sweep_value: 30.0,
            method: Method::Dp,
            outage_rate: 0.05,
            infeasible_rate: 0.049,
            epsilon: 0.001,
            energy_mean_j: 4000.0,
            energy_min_j: 3500.0,
            energy_max_j: 4400.0,
            runtime_mean_s: 0.012,
            trials: 200,
        }];
        let csv = sweep_csv(&rows, false);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "sweep_value,method,outage_rate,energy_mean_j,energy_min_j,energy_max_j,runtime_mean_s,trials"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("3.00000000e1,dp,5.00000000e-2,"));
        assert!(row.ends_with(",0.00000000e0,200"));
        assert!(!csv.ends_with(",\n"));
        assert!(csv.ends_with('\n'));
        // timing included on request
        let with_timing = sweep_csv(&rows, true);
        assert!(with_timing.contains("1.20000000e-2"));
    }
}
