use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_sha256: &'a str,
    passed: Option<bool>,
    result: &'a R,
}

pub struct Sink {
    dir: PathBuf,
    prefix: String,
    sha256: String,
}

impl Sink {
    pub fn new(dir: PathBuf, prefix: String, sha256: String) -> io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, prefix, sha256 })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{}{}", self.prefix, name))
    }

    pub fn json<R: Serialize>(&self, name: &str, command: &str, passed: Option<bool>, result: &R) -> io::Result<PathBuf> {
        let env = Envelope {
            tool: "fockshell",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_sha256: &self.sha256,
            passed,
            result,
        };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        let p = self.path(name);
        fs::write(&p, text)?;
        Ok(p)
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> io::Result<PathBuf> {
        let p = self.path(name);
        write_csv(&p, header, rows)?;
        Ok(p)
    }
}

pub enum Cell {
    F(f64),
    I(i64),
    B(bool),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::F(x) => write!(f, "{x:.16e}"),
            Cell::I(x) => write!(f, "{x}"),
            Cell::B(x) => write!(f, "{x}"),
        }
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> io::Result<()> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()
}
