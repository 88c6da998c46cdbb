//! The five-file TSV network format.
//!
//! | file              | columns                              |
//! |-------------------|--------------------------------------|
//! | `road_nodes.tsv`  | `id x y`                             |
//! | `road_edges.tsv`  | `src dst length`                     |
//! | `users.tsv`       | `id keywords` (comma-joined ids)     |
//! | `social_edges.tsv`| `src dst w_1 .. w_T`                 |
//! | `checkins.tsv`    | `user_id road_vertex_id timestamp`   |
//!
//! Every file starts with a header naming its columns. Ids must be dense
//! and listed in order in the two node files.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, LoadError, Result};
use crate::network::{
    CheckIn, KeywordId, KeywordSet, RoadEdge, RoadNetwork, RoadVertex, SocialNetwork, SpatialSocialNetwork,
    TopicEdge, User, DEFAULT_KEYWORD_BITS,
};

pub const ROAD_NODES: &str = "road_nodes.tsv";
pub const ROAD_EDGES: &str = "road_edges.tsv";
pub const USERS: &str = "users.tsv";
pub const SOCIAL_EDGES: &str = "social_edges.tsv";
pub const CHECKINS: &str = "checkins.tsv";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(dir: &Path, name: &str, header: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{header}")
        .and_then(|_| body(&mut out))
        .and_then(|_| out.flush())
        .map_err(io_err(&path))
}

/// Writes `net` into `dir`, creating the directory if needed.
pub fn save_network(net: &SpatialSocialNetwork, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_file(dir, ROAD_NODES, "id\tx\ty", |out| {
        for (i, v) in net.road.vertices().iter().enumerate() {
            writeln!(out, "{i}\t{}\t{}", v.x, v.y)?;
        }
        Ok(())
    })?;
    write_file(dir, ROAD_EDGES, "src\tdst\tlength", |out| {
        for e in net.road.edges() {
            writeln!(out, "{}\t{}\t{}", e.src, e.dst, e.length)?;
        }
        Ok(())
    })?;
    write_file(dir, USERS, "id\tkeywords", |out| {
        for u in net.social.users() {
            let kws: Vec<String> = u.keywords.ids().iter().map(|k| k.to_string()).collect();
            writeln!(out, "{}\t{}", u.id, kws.join(","))?;
        }
        Ok(())
    })?;
    let topics = net.topic_count();
    let mut header = String::from("src\tdst");
    for t in 1..=topics {
        header.push_str(&format!("\tw_{t}"));
    }
    write_file(dir, SOCIAL_EDGES, &header, |out| {
        for e in net.social.edges() {
            write!(out, "{}\t{}", e.src, e.dst)?;
            for w in &e.weights {
                write!(out, "\t{w}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    })?;
    write_file(dir, CHECKINS, "user_id\troad_vertex_id\ttimestamp", |out| {
        for u in net.social.users() {
            for c in &u.checkins {
                writeln!(out, "{}\t{}\t{}", u.id, c.road_vertex, c.timestamp)?;
            }
        }
        Ok(())
    })
}

struct Table {
    name: &'static str,
    header: Vec<String>,
    rows: Vec<(u64, Vec<String>)>,
}

impl Table {
    fn malformed(&self, line: u64, message: impl Into<String>) -> Error {
        LoadError::MalformedRow {
            file: self.name.to_string(),
            line,
            message: message.into(),
        }
        .into()
    }

    fn parse<T: FromStr>(&self, line: u64, column: &str, raw: &str) -> Result<T> {
        raw.parse()
            .map_err(|_| self.malformed(line, format!("cannot parse {column} from {raw:?}")))
    }

    fn dangling(&self, line: u64, what: &'static str, id: u64, target: &'static str, target_id: u64) -> Error {
        LoadError::DanglingReference {
            file: self.name.to_string(),
            line,
            what,
            id,
            target,
            target_id,
        }
        .into()
    }
}

fn read_table(dir: &Path, name: &'static str, expected: &[&str]) -> Result<Table> {
    let path: PathBuf = dir.join(name);
    if !path.is_file() {
        return Err(LoadError::MissingFile(path).into());
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .flexible(true)
        .quoting(false)
        .from_path(&path)
        .map_err(|e| csv_err(&path, name, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(&path, name, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut table = Table {
        name,
        header,
        rows: Vec::new(),
    };
    if table.header.len() < expected.len() || table.header.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(table.malformed(1, format!("expected header starting with {}", expected.join("\t"))));
    }
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(&path, name, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let fields: Vec<String> = record.iter().map(str::to_string).collect();
        if fields.len() != table.header.len() {
            return Err(table.malformed(
                line,
                format!("expected {} fields, found {}", table.header.len(), fields.len()),
            ));
        }
        table.rows.push((line, fields));
    }
    Ok(table)
}

fn csv_err(path: &Path, name: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => LoadError::MalformedRow {
            file: name.to_string(),
            line,
            message: format!("{other:?}"),
        }
        .into(),
    }
}

/// Reads the five TSV files in `dir`. Structural invariants beyond
/// parseability and referential integrity are left to
/// [`crate::network::validate_network`].
pub fn load_network(dir: &Path) -> Result<SpatialSocialNetwork> {
    let nodes = read_table(dir, ROAD_NODES, &["id", "x", "y"])?;
    let mut vertices = Vec::with_capacity(nodes.rows.len());
    for (line, f) in &nodes.rows {
        let id: u64 = nodes.parse(*line, "id", &f[0])?;
        if id != vertices.len() as u64 {
            return Err(nodes.malformed(*line, format!("expected vertex id {}, found {id}", vertices.len())));
        }
        vertices.push(RoadVertex {
            x: nodes.parse(*line, "x", &f[1])?,
            y: nodes.parse(*line, "y", &f[2])?,
        });
    }
    let n = vertices.len() as u64;

    let road_edges = read_table(dir, ROAD_EDGES, &["src", "dst", "length"])?;
    let mut edges = Vec::with_capacity(road_edges.rows.len());
    for (line, f) in &road_edges.rows {
        let src: u32 = road_edges.parse(*line, "src", &f[0])?;
        let dst: u32 = road_edges.parse(*line, "dst", &f[1])?;
        for (end, other) in [(src, dst), (dst, src)] {
            if end as u64 >= n {
                return Err(road_edges.dangling(*line, "road edge endpoint", other as u64, "road vertex", end as u64));
            }
        }
        edges.push(RoadEdge {
            src,
            dst,
            length: road_edges.parse(*line, "length", &f[2])?,
        });
    }

    let user_rows = read_table(dir, USERS, &["id", "keywords"])?;
    let mut keywords: Vec<BTreeSet<KeywordId>> = Vec::with_capacity(user_rows.rows.len());
    for (line, f) in &user_rows.rows {
        let id: u64 = user_rows.parse(*line, "id", &f[0])?;
        if id != keywords.len() as u64 {
            return Err(user_rows.malformed(*line, format!("expected user id {}, found {id}", keywords.len())));
        }
        let mut set = BTreeSet::new();
        for raw in f[1].split(',').filter(|s| !s.is_empty()) {
            set.insert(user_rows.parse(*line, "keyword", raw.trim())?);
        }
        keywords.push(set);
    }
    let m = keywords.len() as u64;

    let social = read_table(dir, SOCIAL_EDGES, &["src", "dst"])?;
    let topic_count = social.header.len() - 2;
    for (i, col) in social.header[2..].iter().enumerate() {
        if *col != format!("w_{}", i + 1) {
            return Err(social.malformed(1, format!("expected column w_{}, found {col}", i + 1)));
        }
    }
    let mut social_edges = Vec::with_capacity(social.rows.len());
    for (line, f) in &social.rows {
        let src: u32 = social.parse(*line, "src", &f[0])?;
        let dst: u32 = social.parse(*line, "dst", &f[1])?;
        for (end, other) in [(src, dst), (dst, src)] {
            if end as u64 >= m {
                return Err(social.dangling(*line, "social edge endpoint", other as u64, "user", end as u64));
            }
        }
        let weights = f[2..]
            .iter()
            .map(|w| social.parse(*line, "weight", w))
            .collect::<Result<Vec<f64>>>()?;
        social_edges.push(TopicEdge { src, dst, weights });
    }

    let checkin_rows = read_table(dir, CHECKINS, &["user_id", "road_vertex_id", "timestamp"])?;
    let mut checkins: Vec<Vec<CheckIn>> = vec![Vec::new(); m as usize];
    for (line, f) in &checkin_rows.rows {
        let user: u32 = checkin_rows.parse(*line, "user_id", &f[0])?;
        let vertex: u32 = checkin_rows.parse(*line, "road_vertex_id", &f[1])?;
        if user as u64 >= m {
            return Err(checkin_rows.dangling(*line, "check-in at vertex", vertex as u64, "user", user as u64));
        }
        if vertex as u64 >= n {
            return Err(checkin_rows.dangling(*line, "check-in of user", user as u64, "road vertex", vertex as u64));
        }
        checkins[user as usize].push(CheckIn {
            road_vertex: vertex,
            timestamp: checkin_rows.parse(*line, "timestamp", &f[2])?,
        });
    }

    let users = keywords
        .into_iter()
        .zip(checkins)
        .enumerate()
        .map(|(id, (kws, checkins))| User {
            id: id as u32,
            keywords: KeywordSet::new(kws, DEFAULT_KEYWORD_BITS),
            checkins,
        })
        .collect();
    Ok(SpatialSocialNetwork::new(
        RoadNetwork::new(vertices, edges),
        SocialNetwork::new(users, social_edges, topic_count),
    ))
}
