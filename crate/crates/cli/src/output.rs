use std::fs;
use std::path::{Path, PathBuf};

use edgemarket::report::{emit_svg, ChartSpec, Table};
use serde::Serialize;

use crate::CliError;

/// One file written by a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: PathBuf,
    /// Identifier of the file's layout, e.g. `dda.results`.
    pub schema: String,
}

/// Files written by a run plus the table echoed to standard output.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub files: Vec<Artifact>,
    /// Also written as `summary.csv`; nothing is printed that is not in it.
    pub summary: Table,
}

impl RunArtifacts {
    pub fn find(&self, schema: &str) -> Option<&Artifact> {
        self.files.iter().find(|a| a.schema == schema)
    }

    /// Text for standard output: the summary table followed by the file list.
    pub fn report(&self) -> String {
        let mut text = self.summary.to_csv();
        text.push_str("files:\n");
        for a in &self.files {
            text.push_str(&format!("  {} [{}]\n", a.path.display(), a.schema));
        }
        text
    }
}

pub(crate) struct Writer {
    dir: PathBuf,
    svg: bool,
    files: Vec<Artifact>,
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Writer {
    pub fn new(dir: PathBuf, svg: bool) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self {
            dir,
            svg,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, schema: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.files.push(Artifact {
            path,
            schema: schema.to_string(),
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, schema: &str, table: &Table) -> Result<(), CliError> {
        self.write(name, schema, &table.to_csv())
    }

    /// Writes the chart only when SVG output was requested.
    pub fn chart(&mut self, name: &str, table: &Table, spec: &ChartSpec) -> Result<(), CliError> {
        if !self.svg {
            return Ok(());
        }
        let svg = emit_svg(table, spec).map_err(|e| CliError::Config(format!("cannot chart `{name}`: {e}")))?;
        self.write(name, "svg", &svg)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, schema: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
        text.push('\n');
        self.write(name, schema, &text)
    }

    pub fn finish(mut self, summary: Table) -> Result<RunArtifacts, CliError> {
        self.csv("summary.csv", "summary", &summary)?;
        Ok(RunArtifacts {
            out_dir: self.dir,
            files: self.files,
            summary,
        })
    }
}
