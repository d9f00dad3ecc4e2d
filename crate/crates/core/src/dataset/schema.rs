use std::path::Path;

use super::ColumnRole;
use crate::error::{Error, Result};

/// Name of the wildcard entry that assigns a role to unlisted columns.
const DEFAULT_KEY: &str = "*";

#[derive(Debug, Clone, PartialEq)]
pub struct SchemaEntry {
    pub name: String,
    pub role: ColumnRole,
    pub lenient: bool,
}

/// Column-to-role map read from a sidecar file with one
/// `name<TAB>role[<TAB>lenient]` line per column. A `*` entry supplies the
/// role for columns that are not listed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schema {
    entries: Vec<SchemaEntry>,
    default: Option<(ColumnRole, bool)>,
}

impl Schema {
    pub fn new() -> Self {
        Schema::default()
    }

    pub fn with(mut self, name: &str, role: ColumnRole) -> Self {
        self.insert(name, role, false);
        self
    }

    pub fn with_lenient(mut self, name: &str, role: ColumnRole) -> Self {
        self.insert(name, role, true);
        self
    }

    pub fn with_default(mut self, role: ColumnRole) -> Self {
        self.default = Some((role, false));
        self
    }

    fn insert(&mut self, name: &str, role: ColumnRole, lenient: bool) {
        self.entries.retain(|e| e.name != name);
        self.entries.push(SchemaEntry {
            name: name.to_owned(),
            role,
            lenient,
        });
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut schema = Schema::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(Error::Schema {
                    line,
                    message: "expected `name<TAB>role[<TAB>lenient]`".into(),
                });
            }
            let name = fields[0].trim();
            let role: ColumnRole = fields[1]
                .parse()
                .map_err(|message| Error::Schema { line, message })?;
            let lenient = match fields.get(2).map(|s| s.trim()) {
                None | Some("") => false,
                Some("lenient") => true,
                Some(other) => {
                    return Err(Error::Schema {
                        line,
                        message: format!("unknown flag `{other}`"),
                    })
                }
            };
            if name == DEFAULT_KEY {
                schema.default = Some((role, lenient));
                continue;
            }
            if schema.entries.iter().any(|e| e.name == name) {
                return Err(Error::Schema {
                    line,
                    message: format!("column `{name}` listed twice"),
                });
            }
            schema.entries.push(SchemaEntry {
                name: name.to_owned(),
                role,
                lenient,
            });
        }
        Ok(schema)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Schema::parse(&text)
    }

    pub fn entries(&self) -> &[SchemaEntry] {
        &self.entries
    }

    /// Role and leniency for `name`, falling back to the default entry.
    pub fn lookup(&self, name: &str) -> Option<(ColumnRole, bool)> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .map(|e| (e.role, e.lenient))
            .or(self.default)
    }

    /// Fails on the first listed name absent from `headers`.
    pub fn check_known<S: AsRef<str>>(&self, headers: &[S]) -> Result<()> {
        for e in &self.entries {
            if !headers.iter().any(|h| h.as_ref() == e.name) {
                return Err(Error::UnknownSchemaColumn(e.name.clone()));
            }
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.name);
            out.push('\t');
            out.push_str(e.role.as_str());
            if e.lenient {
                out.push_str("\tlenient");
            }
            out.push('\n');
        }
        if let Some((role, lenient)) = self.default {
            out.push_str(DEFAULT_KEY);
            out.push('\t');
            out.push_str(role.as_str());
            if lenient {
                out.push_str("\tlenient");
            }
            out.push('\n');
        }
        out
    }
}
