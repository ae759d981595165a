//! Symbolic open books: a page as a handle inventory, the monodromy as a word
//! in labelled twist generators, and the equivalence moves between them.
//!
//! Text format (one record per line, `#` starts a comment):
//!
//! ```text
//! openbook v1
//! n <half-dimension>
//! handle <label> <index> <framing>
//! sphere <label> <handle>[,<handle>...] [disk=<disk label>]
//! disk <label> <tag>
//! word <letter>*          # letter = label | label^-1
//! ```
//!
//! Labels are non-empty runs of `[A-Za-z0-9_.-]` and share one namespace.
//! Records are written in insertion order, so the format round-trips exactly.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MovesError {
    #[error("duplicate label {0}")]
    DuplicateLabel(String),
    #[error("unknown label {0}")]
    UnknownLabel(String),
    #[error("invalid label {0:?}")]
    InvalidLabel(String),
    #[error("handle {label} has index {index}, expected {expected}")]
    InvalidIndex { label: String, index: usize, expected: String },
    #[error("power must be +1 or -1, got {0}")]
    InvalidPower(i8),
    #[error("stabilized sphere {0} must use exactly one critical handle")]
    MalformedStabilization(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, MovesError>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Handle {
    pub label: String,
    pub index: usize,
    pub framing: String,
}

/// A Lagrangian sphere in the page. `disk` is set for spheres created by
/// stabilization: the disk's core meets the belt sphere of its single
/// handle transversely in one point.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sphere {
    pub label: String,
    pub handles: Vec<String>,
    pub disk: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DiskBoundary {
    pub label: String,
    pub tag: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AbstractPage {
    /// Half the page dimension; critical handles have this index.
    pub n: usize,
    pub handles: Vec<Handle>,
    pub spheres: Vec<Sphere>,
    pub disks: Vec<DiskBoundary>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Power(i8);

impl Power {
    pub const POS: Power = Power(1);
    pub const NEG: Power = Power(-1);

    pub fn new(p: i8) -> Result<Self> {
        match p {
            1 | -1 => Ok(Power(p)),
            _ => Err(MovesError::InvalidPower(p)),
        }
    }

    pub fn get(self) -> i8 {
        self.0
    }

    pub fn inverse(self) -> Self {
        Power(-self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub sphere: String,
    pub power: Power,
}

impl Letter {
    pub fn new(sphere: impl Into<String>, power: Power) -> Self {
        Self {
            sphere: sphere.into(),
            power,
        }
    }

    pub fn pos(sphere: impl Into<String>) -> Self {
        Self::new(sphere, Power::POS)
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.sphere.clone(), self.power.inverse())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct MonodromyWord {
    pub letters: Vec<Letter>,
}

impl MonodromyWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    /// Cancels adjacent `x·x⁻¹` pairs.
    pub fn reduced(&self) -> Self {
        let mut out: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for l in &self.letters {
            if out.last().is_some_and(|p| *p == l.inverse()) {
                out.pop();
            } else {
                out.push(l.clone());
            }
        }
        Self { letters: out }
    }

    /// Free reduction followed by cancelling inverse first/last letters.
    pub fn cyclically_reduced(&self) -> Self {
        let mut v = self.reduced().letters;
        while v.len() >= 2 && v[0] == v[v.len() - 1].inverse() {
            v.pop();
            v.remove(0);
        }
        Self { letters: v }
    }

    pub fn is_positive(&self) -> bool {
        self.letters.iter().all(|l| l.power == Power::POS)
    }

    /// Lexicographically least rotation.
    fn min_rotation(&self) -> Self {
        let n = self.letters.len();
        (0..n)
            .map(|s| self.letters[s..].iter().chain(&self.letters[..s]).cloned().collect::<Vec<_>>())
            .min()
            .map(Self::new)
            .unwrap_or_default()
    }

    /// Sum of powers per sphere label; unchanged by rotation, conjugation
    /// and reduction.
    pub fn exponent_sums(&self) -> Vec<(String, i64)> {
        let mut m: std::collections::BTreeMap<String, i64> = Default::default();
        for l in &self.letters {
            *m.entry(l.sphere.clone()).or_default() += l.power.get() as i64;
        }
        m.into_iter().filter(|(_, v)| *v != 0).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OpenBookDesc {
    pub page: AbstractPage,
    pub word: MonodromyWord,
}

fn valid_label(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

pub fn stabilized_handle_label(disk: &str) -> String {
    format!("h.{disk}")
}

pub fn stabilized_sphere_label(disk: &str) -> String {
    format!("{disk}.S")
}

impl OpenBookDesc {
    /// Trivial open book on an empty page of half-dimension `n`.
    pub fn trivial(n: usize) -> Self {
        Self {
            page: AbstractPage {
                n,
                handles: vec![],
                spheres: vec![],
                disks: vec![],
            },
            word: MonodromyWord::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let page = &self.page;
        let mut seen = HashSet::new();
        let labels = page
            .handles
            .iter()
            .map(|h| &h.label)
            .chain(page.spheres.iter().map(|s| &s.label))
            .chain(page.disks.iter().map(|d| &d.label));
        for l in labels {
            if !valid_label(l) {
                return Err(MovesError::InvalidLabel(l.clone()));
            }
            if !seen.insert(l.as_str()) {
                return Err(MovesError::DuplicateLabel(l.clone()));
            }
        }
        for h in &page.handles {
            if h.index > page.n {
                return Err(MovesError::InvalidIndex {
                    label: h.label.clone(),
                    index: h.index,
                    expected: format!("<= {}", page.n),
                });
            }
        }
        for s in &page.spheres {
            for h in &s.handles {
                if self.handle(h).is_none() {
                    return Err(MovesError::UnknownLabel(h.clone()));
                }
            }
            if let Some(d) = &s.disk {
                if self.disk(d).is_none() {
                    return Err(MovesError::UnknownLabel(d.clone()));
                }
                let critical = s.handles.len() == 1 && self.handle(&s.handles[0]).is_some_and(|h| h.index == page.n);
                if !critical {
                    return Err(MovesError::MalformedStabilization(s.label.clone()));
                }
            }
        }
        for l in &self.word.letters {
            if self.sphere(&l.sphere).is_none() {
                return Err(MovesError::UnknownLabel(l.sphere.clone()));
            }
        }
        Ok(())
    }

    pub fn handle(&self, label: &str) -> Option<&Handle> {
        self.page.handles.iter().find(|h| h.label == label)
    }

    pub fn sphere(&self, label: &str) -> Option<&Sphere> {
        self.page.spheres.iter().find(|s| s.label == label)
    }

    pub fn disk(&self, label: &str) -> Option<&DiskBoundary> {
        self.page.disks.iter().find(|d| d.label == label)
    }

    fn label_taken(&self, label: &str) -> bool {
        self.handle(label).is_some() || self.sphere(label).is_some() || self.disk(label).is_some()
    }

    pub fn with_handle(mut self, label: &str, index: usize, framing: &str) -> Result<Self> {
        if self.label_taken(label) {
            return Err(MovesError::DuplicateLabel(label.into()));
        }
        self.page.handles.push(Handle {
            label: label.into(),
            index,
            framing: framing.into(),
        });
        self.validate()?;
        Ok(self)
    }

    pub fn with_sphere(mut self, label: &str, handles: &[&str]) -> Result<Self> {
        if self.label_taken(label) {
            return Err(MovesError::DuplicateLabel(label.into()));
        }
        self.page.spheres.push(Sphere {
            label: label.into(),
            handles: handles.iter().map(|s| s.to_string()).collect(),
            disk: None,
        });
        self.validate()?;
        Ok(self)
    }

    pub fn with_disk(mut self, label: &str, tag: &str) -> Result<Self> {
        if self.label_taken(label) {
            return Err(MovesError::DuplicateLabel(label.into()));
        }
        self.page.disks.push(DiskBoundary {
            label: label.into(),
            tag: tag.into(),
        });
        self.validate()?;
        Ok(self)
    }

    pub fn with_word(mut self, letters: Vec<Letter>) -> Result<Self> {
        self.word = MonodromyWord::new(letters);
        self.validate()?;
        Ok(self)
    }

    /// Canonical representative modulo rotation, conjugation and free
    /// reduction, with page records sorted by label.
    pub fn canonical(&self) -> Self {
        let mut page = self.page.clone();
        page.handles.sort_by(|a, b| a.label.cmp(&b.label));
        page.spheres.sort_by(|a, b| a.label.cmp(&b.label));
        page.disks.sort_by(|a, b| a.label.cmp(&b.label));
        Self {
            page,
            word: self.word.cyclically_reduced().min_rotation(),
        }
    }
}

/// Moves the last letter to the front.
pub fn cyclic_rotate(desc: &OpenBookDesc) -> OpenBookDesc {
    let mut out = desc.clone();
    if let Some(l) = out.word.letters.pop() {
        out.word.letters.insert(0, l);
    }
    out
}

/// `word ↦ c⁻¹·word·c`, freely reduced, with `c = by^power`.
pub fn conjugate(desc: &OpenBookDesc, by: &str, power: Power) -> Result<OpenBookDesc> {
    if desc.sphere(by).is_none() {
        return Err(MovesError::UnknownLabel(by.into()));
    }
    let c = Letter::new(by, power);
    let mut letters = vec![c.inverse()];
    letters.extend(desc.word.letters.iter().cloned());
    letters.push(c);
    let out = OpenBookDesc {
        page: desc.page.clone(),
        word: MonodromyWord::new(letters).reduced(),
    };
    out.validate()?;
    Ok(out)
}

/// Attaches a subcritical handle; the monodromy extends by the identity.
pub fn subcritical_attach(desc: &OpenBookDesc, label: &str, index: usize, framing: &str) -> Result<OpenBookDesc> {
    if index >= desc.page.n {
        return Err(MovesError::InvalidIndex {
            label: label.into(),
            index,
            expected: format!("< {}", desc.page.n),
        });
    }
    desc.clone().with_handle(label, index, &format!("{framing}+eps_D2"))
}

/// Attaches a critical handle along the boundary of disk `disk` and appends
/// the positive twist along the resulting sphere.
pub fn stabilize(desc: &OpenBookDesc, disk: &str) -> Result<OpenBookDesc> {
    if desc.disk(disk).is_none() {
        return Err(MovesError::NotApplicable(format!("{disk} is not a Legendrian disk boundary")));
    }
    let h = stabilized_handle_label(disk);
    let s = stabilized_sphere_label(disk);
    for l in [&h, &s] {
        if desc.label_taken(l) {
            return Err(MovesError::DuplicateLabel(l.clone()));
        }
    }
    let mut out = desc.clone();
    out.page.handles.push(Handle {
        label: h.clone(),
        index: desc.page.n,
        framing: "stab".into(),
    });
    out.page.spheres.push(Sphere {
        label: s.clone(),
        handles: vec![h],
        disk: Some(disk.into()),
    });
    out.word.letters.push(Letter::pos(s));
    out.validate()?;
    Ok(out)
}

/// Inverse of [`stabilize`] when the final letter matches its pattern.
pub fn destabilize(desc: &OpenBookDesc) -> Result<OpenBookDesc> {
    let last = desc
        .word
        .letters
        .last()
        .ok_or_else(|| MovesError::NotApplicable("empty word".into()))?;
    if last.power != Power::POS {
        return Err(MovesError::NotApplicable("final letter is not positive".into()));
    }
    let sphere = desc.sphere(&last.sphere).expect("validated");
    if sphere.disk.is_none() {
        return Err(MovesError::NotApplicable(format!("{} is not a stabilization sphere", sphere.label)));
    }
    let h = &sphere.handles[0];
    if desc.page.spheres.iter().any(|s| s.label != sphere.label && s.handles.contains(h)) {
        return Err(MovesError::NotApplicable(format!("handle {h} supports another sphere")));
    }
    let uses = desc.word.letters.iter().filter(|l| l.sphere == sphere.label).count();
    if uses != 1 {
        return Err(MovesError::NotApplicable(format!("{} occurs {uses} times in the word", sphere.label)));
    }
    let mut out = desc.clone();
    out.word.letters.pop();
    let (sl, hl) = (sphere.label.clone(), h.clone());
    out.page.spheres.retain(|s| s.label != sl);
    out.page.handles.retain(|x| x.label != hl);
    out.validate()?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equivalence {
    /// Connected by at most `depth` stabilizations/destabilizations plus
    /// rotations and conjugations.
    Equivalent { depth: usize },
    Unknown,
}

impl Equivalence {
    pub fn is_equivalent(self) -> bool {
        matches!(self, Equivalence::Equivalent { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Positivity {
    Positive,
    Unknown,
}

/// Positive when the canonical word uses only right-handed twists.
pub fn positivity(desc: &OpenBookDesc) -> Positivity {
    if desc.canonical().word.is_positive() {
        Positivity::Positive
    } else {
        Positivity::Unknown
    }
}

/// Canonical results of one destabilization, over every letter that can be
/// rotated to the end.
fn destabilizations(desc: &OpenBookDesc) -> Vec<OpenBookDesc> {
    let mut out = Vec::new();
    for i in 0..desc.word.letters.len() {
        let mut rotated = desc.clone();
        rotated.word.letters.rotate_left(i + 1);
        if let Ok(d) = destabilize(&rotated) {
            let d = d.canonical();
            if !out.contains(&d) {
                out.push(d);
            }
        }
    }
    out
}

fn destabilization_ball(start: OpenBookDesc, depth: usize) -> HashMap<OpenBookDesc, usize> {
    let mut dist = HashMap::from([(start.clone(), 0)]);
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        let d = dist[&cur];
        if d == depth {
            continue;
        }
        for nb in destabilizations(&cur) {
            if !dist.contains_key(&nb) {
                dist.insert(nb.clone(), d + 1);
                queue.push_back(nb);
            }
        }
    }
    dist
}

/// Bounded breadth-first search from both ends. Rotations, conjugations and
/// free reduction are absorbed into [`OpenBookDesc::canonical`]. A
/// stabilization is walked backwards as a destabilization of its result, so
/// both searches only destabilize and the two balls are intersected; `depth`
/// bounds the total number of (de)stabilizations.
///
/// Destabilizing deletes a generator occurring once, and deleting one never
/// blocks another, so any move chain between the inputs reaches a common
/// destabilized form.
pub fn equivalent_up_to_moves(d1: &OpenBookDesc, d2: &OpenBookDesc, depth: usize) -> Equivalence {
    let a = destabilization_ball(d1.canonical(), depth);
    let b = destabilization_ball(d2.canonical(), depth);
    a.iter()
        .filter_map(|(k, da)| b.get(k).map(|db| da + db))
        .filter(|t| *t <= depth)
        .min()
        .map_or(Equivalence::Unknown, |depth| Equivalence::Equivalent { depth })
}

/// One randomly chosen applicable move, with a short description.
pub fn random_move<R: Rng>(desc: &OpenBookDesc, rng: &mut R) -> (OpenBookDesc, String) {
    loop {
        match rng.gen_range(0..4) {
            0 => return (cyclic_rotate(desc), "rotate".into()),
            1 => {
                if let Some(s) = desc.page.spheres.choose(rng) {
                    let p = if rng.gen() { Power::POS } else { Power::NEG };
                    let out = conjugate(desc, &s.label, p).expect("sphere exists");
                    return (out, format!("conjugate {} {}", s.label, p.get()));
                }
            }
            2 => {
                let free: Vec<_> = desc
                    .page
                    .disks
                    .iter()
                    .filter(|d| !desc.label_taken(&stabilized_handle_label(&d.label)))
                    .collect();
                if let Some(d) = free.choose(rng) {
                    return (stabilize(desc, &d.label).expect("free disk"), format!("stabilize {}", d.label));
                }
            }
            _ => {
                if let Ok(out) = destabilize(desc) {
                    return (out, "destabilize".into());
                }
            }
        }
    }
}

/// A small random page with `spheres` spheres, `disks` disks and a reduced
/// random word of length at most `max_word`.
pub fn random_desc<R: Rng>(rng: &mut R, spheres: usize, disks: usize, max_word: usize) -> OpenBookDesc {
    let mut d = OpenBookDesc::trivial(2)
        .with_handle("h0", 0, "std")
        .and_then(|d| d.with_handle("h1", 1, "std"))
        .expect("fresh labels");
    for i in 0..spheres {
        let h = format!("c{i}");
        d = d.with_handle(&h, 2, "std").expect("fresh");
        d = d.with_sphere(&format!("S{i}"), &[&h, "h1"]).expect("fresh");
    }
    for i in 0..disks {
        d = d.with_disk(&format!("D{i}"), "leg").expect("fresh");
    }
    let len = rng.gen_range(0..=max_word);
    let letters = (0..len)
        .filter_map(|_| {
            let s = d.page.spheres.choose(rng)?;
            Some(Letter::new(s.label.clone(), if rng.gen_bool(0.7) { Power::POS } else { Power::NEG }))
        })
        .collect();
    d.word = MonodromyWord::new(letters).reduced();
    d
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.power == Power::POS {
            write!(f, "{}", self.sphere)
        } else {
            write!(f, "{}^-1", self.sphere)
        }
    }
}

impl fmt::Display for OpenBookDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "openbook v1")?;
        writeln!(f, "n {}", self.page.n)?;
        for h in &self.page.handles {
            writeln!(f, "handle {} {} {}", h.label, h.index, h.framing)?;
        }
        for s in &self.page.spheres {
            write!(f, "sphere {} {}", s.label, s.handles.join(","))?;
            if let Some(d) = &s.disk {
                write!(f, " disk={d}")?;
            }
            writeln!(f)?;
        }
        for d in &self.page.disks {
            writeln!(f, "disk {} {}", d.label, d.tag)?;
        }
        write!(f, "word")?;
        for l in &self.word.letters {
            write!(f, " {l}")?;
        }
        writeln!(f)
    }
}

impl std::str::FromStr for OpenBookDesc {
    type Err = MovesError;

    fn from_str(s: &str) -> Result<Self> {
        let perr = |line: usize, msg: &str| MovesError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, "openbook v1")) => {}
            Some((i, _)) => return Err(perr(i, "expected header `openbook v1`")),
            None => return Err(perr(0, "empty input")),
        }
        let mut n = None;
        let mut page = AbstractPage {
            n: 0,
            handles: vec![],
            spheres: vec![],
            disks: vec![],
        };
        let mut word = None;
        let mut labels = BTreeSet::new();
        let mut fresh = |i: usize, l: &str| -> Result<String> {
            if !valid_label(l) {
                return Err(perr(i, &format!("invalid label {l:?}")));
            }
            if !labels.insert(l.to_string()) {
                return Err(perr(i, &format!("duplicate label {l}")));
            }
            Ok(l.to_string())
        };
        for (i, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "n" if toks.len() == 2 && n.is_none() => {
                    n = Some(toks[1].parse().map_err(|_| perr(i, "bad half-dimension"))?);
                }
                "handle" if toks.len() == 4 => page.handles.push(Handle {
                    label: fresh(i, toks[1])?,
                    index: toks[2].parse().map_err(|_| perr(i, "bad handle index"))?,
                    framing: toks[3].to_string(),
                }),
                "sphere" if toks.len() == 3 || toks.len() == 4 => {
                    let disk = match toks.get(3) {
                        Some(t) => Some(t.strip_prefix("disk=").ok_or_else(|| perr(i, "expected disk=<label>"))?.to_string()),
                        None => None,
                    };
                    page.spheres.push(Sphere {
                        label: fresh(i, toks[1])?,
                        handles: toks[2].split(',').map(str::to_string).collect(),
                        disk,
                    });
                }
                "disk" if toks.len() == 3 => page.disks.push(DiskBoundary {
                    label: fresh(i, toks[1])?,
                    tag: toks[2].to_string(),
                }),
                "word" if word.is_none() => {
                    let letters = toks[1..]
                        .iter()
                        .map(|t| match t.strip_suffix("^-1") {
                            Some(l) => Letter::new(l, Power::NEG),
                            None => Letter::pos(*t),
                        })
                        .collect();
                    word = Some(MonodromyWord::new(letters));
                }
                _ => return Err(perr(i, &format!("unrecognized record `{line}`"))),
            }
        }
        page.n = n.ok_or_else(|| perr(0, "missing `n` record"))?;
        let desc = OpenBookDesc {
            page,
            word: word.ok_or_else(|| perr(0, "missing `word` record"))?,
        };
        desc.validate()?;
        Ok(desc)
    }
}
