//! Serialization of the core types to the documented JSON and CSV shapes.
//!
//! Exact values are always emitted as rational strings; decimal columns are
//! derived for readability and never feed back into computation. All maps are
//! built in a fixed order so identical invocations produce identical bytes.

use pasep_core::markov::{Distribution, EmpiricalTable};
use pasep_core::mlq::{LinkedMlq, SpeciesCount, Word};
use pasep_core::scalar::decimal_string;
use pasep_core::verify::{Outcome, VerificationReport};
use pasep_core::{QParam, Rational};
use serde_json::{json, Map, Value};

pub const DECIMAL_DIGITS: usize = 15;

pub fn word_key(word: &Word) -> String {
    word.to_string()
}

fn type_array(m: &SpeciesCount) -> Value {
    Value::Array(m.counts().iter().map(|&c| json!(c)).collect())
}

fn exact_str(x: &Rational) -> String {
    x.to_string()
}

/// `{"type": [...], "q": "p/r", "method": "...", "probs": {"1,2,3": "p/r"}}`
pub fn distribution_json(d: &Distribution, q: &QParam, method: &str) -> Value {
    let mut probs = Map::new();
    for (word, p) in d.iter() {
        probs.insert(word_key(word), Value::String(exact_str(p)));
    }
    json!({
        "type": type_array(d.species()),
        "q": q.to_string(),
        "method": method,
        "probs": Value::Object(probs),
    })
}

/// CSV lines `word,exact,decimal` with a header.
pub fn distribution_csv(d: &Distribution) -> String {
    let mut out = String::from("word,exact,decimal\n");
    for (word, p) in d.iter() {
        out.push_str(&format!(
            "\"{}\",{},{}\n",
            word_key(word),
            exact_str(p),
            decimal_string(p, DECIMAL_DIGITS)
        ));
    }
    out
}

/// Correlation table rows `i,j,exact,decimal`, diagonal omitted.
pub fn correlations_csv(table: &[(usize, usize, Rational)]) -> String {
    let mut out = String::from("i,j,exact,decimal\n");
    for (i, j, value) in table {
        out.push_str(&format!(
            "{i},{j},{},{}\n",
            exact_str(value),
            decimal_string(value, DECIMAL_DIGITS)
        ));
    }
    out
}

pub fn correlations_json(
    n: usize,
    q: &QParam,
    method: &str,
    variant: Option<&str>,
    table: &[(usize, usize, Rational)],
) -> Value {
    let mut entries = Map::new();
    for (i, j, value) in table {
        entries.insert(format!("{i},{j}"), Value::String(exact_str(value)));
    }
    let mut root = Map::new();
    root.insert("n".into(), json!(n));
    root.insert("q".into(), Value::String(q.to_string()));
    root.insert("method".into(), Value::String(method.into()));
    if let Some(variant) = variant {
        root.insert("variant".into(), Value::String(variant.into()));
    }
    root.insert("entries".into(), Value::Object(entries));
    Value::Object(root)
}

/// One NDJSON record per linked multiline queue:
/// `{"mlq": [".#..", "#.##"], "links": [[1,2,1]], "weight": "1/7", "word": [2,3,1,2]}`
pub fn linked_mlq_record(linked: &LinkedMlq) -> Value {
    json!({
        "mlq": linked.mlq.pattern_strings(),
        "links": linked
            .links
            .iter()
            .map(|l| json!([l.row, l.from_site, l.to_site]))
            .collect::<Vec<_>>(),
        "weight": exact_str(&linked.weight),
        "word": linked.word.labels(),
    })
}

/// Sampling frequency table.
pub fn sample_json(
    m: &SpeciesCount,
    q_text: &str,
    samples: u64,
    seed: u64,
    freq: &[(Word, u64)],
) -> Value {
    let mut freq_map = Map::new();
    for (word, count) in freq {
        freq_map.insert(word_key(word), json!(count));
    }
    json!({
        "type": type_array(m),
        "q": q_text,
        "samples": samples,
        "seed": seed,
        "freq": Value::Object(freq_map),
    })
}

pub fn sample_csv(freq: &[(Word, u64)], samples: u64) -> String {
    let mut out = String::from("word,count,frequency\n");
    for (word, count) in freq {
        out.push_str(&format!(
            "\"{}\",{count},{:.6}\n",
            word_key(word),
            *count as f64 / samples as f64
        ));
    }
    out
}

/// Empirical (Gillespie) table: `i,j,estimate` rows.
pub fn empirical_csv(table: &EmpiricalTable) -> String {
    let mut out = String::from("i,j,estimate\n");
    for (i, j, v) in table.iter() {
        out.push_str(&format!("{i},{j},{v:.15}\n"));
    }
    out
}

pub fn empirical_json(m: &SpeciesCount, q: f64, seed: u64, table: &EmpiricalTable) -> Value {
    let mut entries = Map::new();
    for (i, j, v) in table.iter() {
        entries.insert(format!("{i},{j}"), json!(v));
    }
    json!({
        "type": type_array(m),
        "q": q,
        "seed": seed,
        "events": table.events,
        "entries": Value::Object(entries),
    })
}

/// The verification report in its documented schema.
pub fn report_json(report: &VerificationReport) -> Value {
    let config = &report.config;
    let families_value = match &config.families {
        Some(list) => Value::Array(
            list.iter()
                .map(|f| Value::String(f.as_str().into()))
                .collect(),
        ),
        None => Value::Null,
    };
    let config_json = json!({
        "max_sites": config.max_sites,
        "q_list": config.q_list.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
        "seed": config.seed,
        "families": families_value,
        "enumeration_cap": config.enumeration_cap,
        "linking_cap": config.linking_cap,
        "state_cap": config.state_cap,
        "sampler_samples": config.sampler_samples,
        "gillespie_horizon": config.gillespie_horizon,
        "gillespie_burn_in": config.gillespie_burn_in,
    });
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| {
            let mut obj = Map::new();
            obj.insert("id".into(), Value::String(c.id.clone()));
            obj.insert("family".into(), Value::String(c.family.as_str().into()));
            obj.insert("lhs".into(), Value::String(c.lhs.clone()));
            obj.insert("rhs".into(), Value::String(c.rhs.clone()));
            obj.insert("equal".into(), Value::Bool(c.outcome == Outcome::Pass));
            if c.outcome == Outcome::Skipped {
                obj.insert("skipped".into(), Value::Bool(true));
            }
            obj.insert("detail".into(), Value::String(c.detail.clone()));
            Value::Object(obj)
        })
        .collect();
    let mut families = Map::new();
    for (family, counts) in &report.summary.families {
        families.insert(
            family.as_str().into(),
            json!({"run": counts.run, "failed": counts.failed, "skipped": counts.skipped}),
        );
    }
    let adjudication: Vec<Value> = report
        .variant_adjudication
        .iter()
        .map(|a| json!({"n": a.n, "i": a.i, "j": a.j, "q": a.q, "matched": a.matched}))
        .collect();
    json!({
        "version": report.version,
        "config": config_json,
        "checks": checks,
        "summary": {
            "pass": report.summary.pass,
            "families": Value::Object(families),
        },
        "variant_adjudication": adjudication,
    })
}
