use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stance::StanceLabel;

pub const POSTS_HEADER: &str = "post_id\tuser_id\ttarget\tstance\ttext";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPost {
    pub post_id: String,
    pub user_id: String,
    pub target: String,
    pub stance: StanceLabel,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    posts: Vec<LabeledPost>,
    /// In order of first appearance.
    targets: Vec<String>,
}

impl Dataset {
    pub fn new(posts: Vec<LabeledPost>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(posts.len());
        let mut targets: Vec<String> = Vec::new();
        for p in &posts {
            if !seen.insert(p.post_id.as_str()) {
                return Err(Error::DuplicateId(p.post_id.clone()));
            }
            if p.target.is_empty() {
                return Err(Error::EmptyTarget);
            }
            if !targets.contains(&p.target) {
                targets.push(p.target.clone());
            }
        }
        Ok(Dataset { posts, targets })
    }

    pub fn posts(&self) -> &[LabeledPost] {
        &self.posts
    }

    pub fn post(&self, i: usize) -> &LabeledPost {
        &self.posts[i]
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    /// Indices of the posts about `target`, in file order.
    pub fn indices_for(&self, target: &str) -> Vec<usize> {
        self.posts
            .iter()
            .enumerate()
            .filter(|(_, p)| p.target == target)
            .map(|(i, _)| i)
            .collect()
    }

    /// Exact target name, or the unique target containing `name`
    /// (case-insensitive), so `Trump` resolves to `Donald Trump`.
    pub fn resolve_target(&self, name: &str) -> Result<&str> {
        if let Some(t) = self.targets.iter().find(|t| *t == name) {
            return Ok(t);
        }
        let lower = name.to_lowercase();
        let hits: Vec<&String> = self
            .targets
            .iter()
            .filter(|t| t.to_lowercase().contains(&lower))
            .collect();
        match hits.as_slice() {
            [one] => Ok(one),
            _ => Err(Error::UnknownTarget(name.to_owned())),
        }
    }

    /// Distinct users in order of first appearance.
    pub fn users(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.posts
            .iter()
            .filter(|p| seen.insert(p.user_id.as_str()))
            .map(|p| p.user_id.as_str())
            .collect()
    }

    pub fn label_counts(&self, target: &str) -> (usize, usize) {
        self.posts
            .iter()
            .filter(|p| p.target == target)
            .fold((0, 0), |(f, a), p| match p.stance {
                StanceLabel::Favor => (f + 1, a),
                StanceLabel::Against => (f, a + 1),
            })
    }
}

pub fn parse_posts(reader: impl BufRead, name: &str) -> Result<Dataset> {
    let err = |line: usize, message: String| Error::Parse {
        path: name.to_owned(),
        line,
        message,
    };
    let mut lines = reader.lines();
    match lines.next() {
        Some(h) => {
            let h = h.map_err(|e| Error::io(name, e))?;
            let cols: Vec<_> = h.trim_end_matches('\r').split('\t').map(|c| c.trim().to_ascii_lowercase()).collect();
            if cols != ["post_id", "user_id", "target", "stance", "text"] {
                return Err(err(1, format!("expected header {POSTS_HEADER:?}, got {h:?}")));
            }
        }
        None => return Err(err(1, "missing header row".into())),
    }
    let mut posts = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(name, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.splitn(5, '\t').collect();
        if f.len() != 5 {
            return Err(err(lineno, format!("expected 5 tab-separated fields, got {}", f.len())));
        }
        let stance = f[3]
            .parse()
            .map_err(|_| err(lineno, format!("bad stance {:?}", f[3])))?;
        if f[0].is_empty() || f[1].is_empty() || f[2].is_empty() {
            return Err(err(lineno, "empty post_id, user_id or target".into()));
        }
        posts.push(LabeledPost {
            post_id: f[0].to_owned(),
            user_id: f[1].to_owned(),
            target: f[2].to_owned(),
            stance,
            text: f[4].to_owned(),
        });
    }
    Dataset::new(posts)
}

pub fn read_posts(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_posts(BufReader::new(file), &path.display().to_string())
}

pub fn write_posts(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let clean = |s: &str| s.replace(['\t', '\n', '\r'], " ");
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{POSTS_HEADER}")?;
        for p in dataset.posts() {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                p.post_id,
                p.user_id,
                p.target,
                p.stance,
                clean(&p.text)
            )?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "post_id\tuser_id\ttarget\tstance\ttext\n\
        p1\tu1\tDonald Trump\tfavor\tVote Trump 2020\n\
        p2\tu2\tJoe Biden\tAGAINST\tno\tthanks\n";

    #[test]
    fn parses_and_resolves_targets() {
        let d = parse_posts(SAMPLE.as_bytes(), "posts.tsv").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.targets(), ["Donald Trump", "Joe Biden"]);
        assert_eq!(d.post(1).text, "no\tthanks");
        assert_eq!(d.resolve_target("trump").unwrap(), "Donald Trump");
        assert!(d.resolve_target("Sanders").is_err());
    }

    #[test]
    fn header_required() {
        assert!(parse_posts("p1\tu1\tT\tfavor\tx\n".as_bytes(), "x").is_err());
    }

    #[test]
    fn bad_stance_and_duplicates() {
        let bad = "post_id\tuser_id\ttarget\tstance\ttext\np1\tu\tT\tneutral\tx\n";
        assert!(matches!(parse_posts(bad.as_bytes(), "x"), Err(Error::Parse { line: 2, .. })));
        let dup = "post_id\tuser_id\ttarget\tstance\ttext\np1\tu\tT\tfavor\tx\np1\tu\tT\tfavor\ty\n";
        assert!(matches!(parse_posts(dup.as_bytes(), "x"), Err(Error::DuplicateId(_))));
    }

    #[test]
    fn write_then_read() {
        let d = parse_posts(SAMPLE.as_bytes(), "x").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("posts.tsv");
        write_posts(&d, &p).unwrap();
        let back = read_posts(&p).unwrap();
        assert_eq!(back.post(0), d.post(0));
        assert_eq!(back.post(1).text, "no thanks");
    }
}
