//! Minimal ARFF reader for the SCADA traffic corpus: numeric attributes plus
//! a final label attribute that is either numeric or a nominal over the label
//! identifiers.

use crate::error::{Error, Result};

use super::{parse_numeric_row, RawRecord, RAW_FEATURE_COUNT};

#[derive(Debug)]
enum AttrKind {
    Numeric,
    Nominal(Vec<String>),
}

pub(super) fn parse_arff(text: &str) -> Result<Vec<RawRecord>> {
    let mut attributes: Vec<AttrKind> = Vec::new();
    let mut in_data = false;
    let mut records = Vec::new();

    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !in_data {
            let lower = line.to_ascii_lowercase();
            if lower.starts_with("@relation") {
                continue;
            }
            if lower.starts_with("@attribute") {
                attributes.push(parse_attribute(line, line_no)?);
                continue;
            }
            if lower.starts_with("@data") {
                if attributes.len() != RAW_FEATURE_COUNT + 1 {
                    return Err(Error::parse(
                        line_no,
                        format!(
                            "expected {} attributes (27 features + label), got {}",
                            RAW_FEATURE_COUNT + 1,
                            attributes.len()
                        ),
                    ));
                }
                for (j, attr) in attributes[..RAW_FEATURE_COUNT].iter().enumerate() {
                    if !matches!(attr, AttrKind::Numeric) {
                        return Err(Error::parse(
                            line_no,
                            format!("attribute {} must be numeric", j + 1),
                        ));
                    }
                }
                in_data = true;
                continue;
            }
            return Err(Error::parse(line_no, format!("unrecognized header line {line:?}")));
        }

        if line.starts_with('{') {
            return Err(Error::parse(line_no, "sparse ARFF rows are not supported"));
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != attributes.len() {
            return Err(Error::parse(
                line_no,
                format!("expected {} values, got {}", attributes.len(), fields.len()),
            ));
        }
        // Translate a nominal label to its position in the declared set, so
        // the row parses like a CSV row with a trailing integer label.
        let label_owned;
        let mut fields = fields;
        if let AttrKind::Nominal(values) = attributes.last().expect("checked above") {
            let raw_label = fields[RAW_FEATURE_COUNT].trim_matches(&['\'', '"'][..]);
            // Nominal specs that already enumerate the numeric identifiers
            // (e.g. {0,1,...,7}) keep their face value; otherwise use the
            // position in the declared list.
            let id = if raw_label.parse::<i64>().is_ok() {
                raw_label.to_string()
            } else {
                let pos = values
                    .iter()
                    .position(|v| v == raw_label)
                    .ok_or_else(|| {
                        Error::parse(line_no, format!("label {raw_label:?} not in nominal set"))
                    })?;
                pos.to_string()
            };
            label_owned = id;
            fields[RAW_FEATURE_COUNT] = &label_owned;
            records.push(parse_numeric_row(&fields, line_no)?);
        } else {
            records.push(parse_numeric_row(&fields, line_no)?);
        }
    }

    if !in_data {
        return Err(Error::data("ARFF file has no @data section"));
    }
    Ok(records)
}

fn parse_attribute(line: &str, line_no: usize) -> Result<AttrKind> {
    // Syntax: @attribute <name> <type>; the name may be quoted and the type
    // is either a numeric keyword or a {v1,v2,...} nominal set.
    let rest = line["@attribute".len()..].trim();
    if rest.is_empty() {
        return Err(Error::parse(line_no, "attribute line missing name and type"));
    }
    let type_part = if let Some(brace) = rest.find('{') {
        &rest[brace..]
    } else {
        rest.rsplit(char::is_whitespace)
            .next()
            .expect("non-empty rest")
    };
    if type_part.starts_with('{') {
        let inner = type_part
            .trim_start_matches('{')
            .trim_end_matches('}')
            .trim();
        let values = inner
            .split(',')
            .map(|v| v.trim().trim_matches(&['\'', '"'][..]).to_string())
            .collect();
        Ok(AttrKind::Nominal(values))
    } else {
        match type_part.to_ascii_lowercase().as_str() {
            "numeric" | "real" | "integer" => Ok(AttrKind::Numeric),
            other => Err(Error::parse(
                line_no,
                format!("unsupported attribute type {other:?}"),
            )),
        }
    }
}
