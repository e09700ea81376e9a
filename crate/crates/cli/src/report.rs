use std::fmt::{self, Display, Write as _};

/// Aligned `key  value` report with optional free-form table rows.
#[derive(Debug, Default, Clone)]
pub struct Report {
    title: String,
    fields: Vec<(String, String)>,
    rows: Vec<String>,
}

impl Report {
    pub fn new(title: &str) -> Self {
        Self {
            title: title.to_string(),
            ..Self::default()
        }
    }

    pub fn field(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn row(&mut self, line: impl Into<String>) -> &mut Self {
        self.rows.push(line.into());
        self
    }

    pub fn verdict(&mut self, pass: bool) -> &mut Self {
        self.field("verdict", if pass { "PASS" } else { "FAIL" })
    }
}

impl Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {}", self.title)?;
        let width = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.fields {
            writeln!(f, "{k:<width$}  {v}")?;
        }
        if !self.rows.is_empty() {
            writeln!(f)?;
            for r in &self.rows {
                writeln!(f, "{r}")?;
            }
        }
        Ok(())
    }
}

/// Tab-separated columns with a header line.
pub fn tsv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().collect();
        let _ = writeln!(out, "{}", cells.join("\t"));
    }
    out
}

pub fn pass_fail(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}
