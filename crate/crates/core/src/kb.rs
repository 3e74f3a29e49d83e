//! Immutable knowledge-base graph with a materialized class hierarchy.
//!
//! The text format is line oriented. `#` starts a comment and tokens are
//! separated by whitespace:
//!
//! ```text
//! class <C>
//! subclass <C> <D>            # C is subsumed by D
//! objprop <r>
//! dataprop <d> numeric|boolean
//! type <x> <C>
//! rel <x> <r> <y>
//! data <x> <d> <value>        # true, false or a decimal literal
//! ```
//!
//! Declarations may appear anywhere in the file. Instances are introduced by
//! the assertions that mention them; `type <x> Thing` introduces an instance
//! without giving it a type.

use std::cmp::Ordering;
use std::fmt;
use std::io::Read;

use fixedbitset::FixedBitSet;
use indexmap::IndexSet;
use thiserror::Error;

/// Name of the top concept. Reserved in the KB format.
pub const THING: &str = "Thing";

const RESERVED_CHARS: &[char] = &['(', ')', ',', '<', '>', '='];

#[derive(Debug, Error, PartialEq)]
pub enum KbError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: undeclared {kind} `{name}`")]
    Undeclared {
        line: usize,
        kind: &'static str,
        name: String,
    },
    #[error("subclass cycle through `{0}`")]
    SubclassCycle(String),
    #[error("line {line}: value `{value}` does not match the {expected} role `{role}`")]
    ValueType {
        line: usize,
        role: String,
        expected: RoleKind,
        value: String,
    },
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error("i/o error: {0}")]
    Io(String),
    #[error("unknown concept id {0}")]
    UnknownConcept(u32),
    #[error("unknown instance id {0}")]
    UnknownInstance(u32),
    #[error("unknown role id {0}")]
    UnknownRole(u32),
    #[error("role `{role}` is {actual}, expected {expected}")]
    RoleKind {
        role: String,
        expected: &'static str,
        actual: RoleKind,
    },
    #[error("unknown name `{0}`")]
    UnknownName(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoleId(pub u32);

impl InstanceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ConceptId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RoleId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoleKind {
    Object,
    Numeric,
    Boolean,
}

impl fmt::Display for RoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoleKind::Object => "object",
            RoleKind::Numeric => "numeric",
            RoleKind::Boolean => "boolean",
        })
    }
}

/// Object position of an asserted triple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Instance(InstanceId),
    Number(f64),
    Bool(bool),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triple {
    pub role: RoleId,
    pub object: Value,
}

impl Triple {
    fn sort_key_cmp(&self, other: &Triple) -> Ordering {
        self.role.cmp(&other.role).then_with(|| match (self.object, other.object) {
            (Value::Instance(a), Value::Instance(b)) => a.cmp(&b),
            (Value::Number(a), Value::Number(b)) => a.total_cmp(&b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(&b),
            // a role has a single kind, so mixed objects never share a role
            _ => Ordering::Equal,
        })
    }
}

/// Values of one data role on one instance.
#[derive(Clone, Debug, PartialEq)]
pub enum DataValues<'a> {
    Numeric(&'a [f64]),
    Boolean(Vec<bool>),
}

impl DataValues<'_> {
    pub fn is_empty(&self) -> bool {
        match self {
            DataValues::Numeric(v) => v.is_empty(),
            DataValues::Boolean(v) => v.is_empty(),
        }
    }
}

/// A set of instances, stored as a bitset over instance ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InstanceSet(FixedBitSet);

impl InstanceSet {
    pub fn empty(universe: usize) -> Self {
        InstanceSet(FixedBitSet::with_capacity(universe))
    }

    pub fn full(universe: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe);
        bits.insert_range(..);
        InstanceSet(bits)
    }

    pub fn from_ids(universe: usize, ids: impl IntoIterator<Item = InstanceId>) -> Self {
        let mut set = Self::empty(universe);
        for id in ids {
            set.insert(id);
        }
        set
    }

    pub fn universe(&self) -> usize {
        self.0.len()
    }

    pub fn insert(&mut self, id: InstanceId) {
        self.0.insert(id.index());
    }

    pub fn contains(&self, id: InstanceId) -> bool {
        self.0.contains(id.index())
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn iter(&self) -> impl Iterator<Item = InstanceId> + '_ {
        self.0.ones().map(|i| InstanceId(i as u32))
    }

    pub fn union_with(&mut self, other: &InstanceSet) {
        self.0.union_with(&other.0);
    }

    pub fn intersect_with(&mut self, other: &InstanceSet) {
        self.0.intersect_with(&other.0);
    }

    pub fn difference_with(&mut self, other: &InstanceSet) {
        self.0.difference_with(&other.0);
    }

    pub fn complement(&mut self) {
        self.0.toggle_range(..);
    }

    pub fn is_subset(&self, other: &InstanceSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// `|self ∩ other|` without allocating.
    pub fn intersection_count(&self, other: &InstanceSet) -> usize {
        self.0.intersection_count(&other.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum RoleData {
    Object(Vec<Vec<InstanceId>>),
    Numeric(Vec<Vec<f64>>),
    // per instance: [has false, has true]
    Boolean(Vec<[bool; 2]>),
}

impl RoleData {
    fn kind(&self) -> RoleKind {
        match self {
            RoleData::Object(_) => RoleKind::Object,
            RoleData::Numeric(_) => RoleKind::Numeric,
            RoleData::Boolean(_) => RoleKind::Boolean,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnowledgeBase {
    instances: IndexSet<String>,
    concepts: IndexSet<String>,
    roles: IndexSet<String>,
    subclass_edges: Vec<(ConceptId, ConceptId)>,
    extensions: Vec<InstanceSet>,
    instance_types: Vec<Vec<ConceptId>>,
    role_data: Vec<RoleData>,
    outgoing: Vec<Vec<Triple>>,
}

impl KnowledgeBase {
    pub fn load<R: Read>(mut source: R) -> Result<Self, KbError> {
        let mut bytes = Vec::new();
        source
            .read_to_end(&mut bytes)
            .map_err(|e| KbError::Io(e.to_string()))?;
        let text = String::from_utf8(bytes).map_err(|_| KbError::Encoding)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, KbError> {
        let lines: Vec<(usize, Vec<&str>)> = text
            .lines()
            .enumerate()
            .map(|(i, line)| {
                let content = line.split('#').next().unwrap_or("");
                (i + 1, content.split_whitespace().collect::<Vec<_>>())
            })
            .filter(|(_, toks)| !toks.is_empty())
            .collect();

        // Pass 1: declarations.
        let mut concepts = IndexSet::new();
        let mut roles: IndexSet<String> = IndexSet::new();
        let mut kinds: Vec<RoleKind> = Vec::new();
        for (line, toks) in &lines {
            let line = *line;
            match toks[0] {
                "class" => {
                    let [name] = args::<1>(line, toks)?;
                    if name != THING {
                        check_name(line, name)?;
                        concepts.insert(name.to_string());
                    }
                }
                "objprop" => {
                    let [name] = args::<1>(line, toks)?;
                    declare_role(line, name, RoleKind::Object, &mut roles, &mut kinds)?;
                }
                "dataprop" => {
                    let [name, kind] = args::<2>(line, toks)?;
                    let kind = match kind {
                        "numeric" => RoleKind::Numeric,
                        "boolean" => RoleKind::Boolean,
                        other => {
                            return Err(KbError::Parse {
                                line,
                                message: format!("unknown data role kind `{other}`"),
                            })
                        }
                    };
                    declare_role(line, name, kind, &mut roles, &mut kinds)?;
                }
                "subclass" | "type" | "rel" | "data" => {}
                other => {
                    return Err(KbError::Parse {
                        line,
                        message: format!("unknown directive `{other}`"),
                    })
                }
            }
        }

        // Pass 2: subclass edges and assertions.
        let concept_id = |line: usize, name: &str| -> Result<ConceptId, KbError> {
            concepts
                .get_index_of(name)
                .map(|i| ConceptId(i as u32))
                .ok_or_else(|| KbError::Undeclared {
                    line,
                    kind: "class",
                    name: name.to_string(),
                })
        };
        let role_id = |line: usize, name: &str, kind: RoleKind| -> Result<RoleId, KbError> {
            let idx = roles.get_index_of(name).ok_or_else(|| KbError::Undeclared {
                line,
                kind: "role",
                name: name.to_string(),
            })?;
            if kinds[idx] != kind {
                return Err(KbError::Parse {
                    line,
                    message: format!("role `{name}` is {}, used as {kind}", kinds[idx]),
                });
            }
            Ok(RoleId(idx as u32))
        };

        let mut instances: IndexSet<String> = IndexSet::new();
        let mut intern = |line: usize, name: &str| -> Result<InstanceId, KbError> {
            check_name(line, name)?;
            let (idx, _) = instances.insert_full(name.to_string());
            Ok(InstanceId(idx as u32))
        };

        let mut subclass_edges = Vec::new();
        let mut asserted_types: Vec<(InstanceId, ConceptId)> = Vec::new();
        let mut rels: Vec<(InstanceId, RoleId, InstanceId)> = Vec::new();
        let mut numbers: Vec<(InstanceId, RoleId, f64)> = Vec::new();
        let mut bools: Vec<(InstanceId, RoleId, bool)> = Vec::new();

        for (line, toks) in &lines {
            let line = *line;
            match toks[0] {
                "subclass" => {
                    let [sub, sup] = args::<2>(line, toks)?;
                    if sub == THING {
                        return Err(KbError::Parse {
                            line,
                            message: "Thing cannot be a subclass".into(),
                        });
                    }
                    let sub = concept_id(line, sub)?;
                    if sup != THING {
                        let sup = concept_id(line, sup)?;
                        subclass_edges.push((sub, sup));
                    }
                }
                "type" => {
                    let [x, c] = args::<2>(line, toks)?;
                    let x = intern(line, x)?;
                    if c != THING {
                        asserted_types.push((x, concept_id(line, c)?));
                    }
                }
                "rel" => {
                    let [x, r, y] = args::<3>(line, toks)?;
                    let r = role_id(line, r, RoleKind::Object)?;
                    let x = intern(line, x)?;
                    let y = intern(line, y)?;
                    rels.push((x, r, y));
                }
                "data" => {
                    let [x, d, v] = args::<3>(line, toks)?;
                    let idx = roles.get_index_of(d).ok_or_else(|| KbError::Undeclared {
                        line,
                        kind: "role",
                        name: d.to_string(),
                    })?;
                    let role = RoleId(idx as u32);
                    let kind = kinds[idx];
                    let x = intern(line, x)?;
                    let mismatch = || KbError::ValueType {
                        line,
                        role: d.to_string(),
                        expected: kind,
                        value: v.to_string(),
                    };
                    match kind {
                        RoleKind::Object => {
                            return Err(KbError::Parse {
                                line,
                                message: format!("role `{d}` is an object role; use `rel`"),
                            })
                        }
                        RoleKind::Boolean => match v {
                            "true" => bools.push((x, role, true)),
                            "false" => bools.push((x, role, false)),
                            _ => return Err(mismatch()),
                        },
                        RoleKind::Numeric => {
                            if v == "true" || v == "false" {
                                return Err(mismatch());
                            }
                            match v.parse::<f64>() {
                                Ok(n) if n.is_finite() => numbers.push((x, role, n)),
                                _ => {
                                    return Err(KbError::Parse {
                                        line,
                                        message: format!("invalid decimal literal `{v}`"),
                                    })
                                }
                            }
                        }
                    }
                }
                _ => {}
            }
        }

        let n_inst = instances.len();
        let n_conc = concepts.len();

        // Supertype closure over the declared DAG.
        let mut parents: Vec<Vec<ConceptId>> = vec![Vec::new(); n_conc];
        for &(sub, sup) in &subclass_edges {
            if !parents[sub.index()].contains(&sup) {
                parents[sub.index()].push(sup);
            }
        }
        let supers = supertype_closure(&parents, &concepts)?;

        let mut type_bits: Vec<FixedBitSet> = vec![FixedBitSet::with_capacity(n_conc); n_inst];
        for &(x, c) in &asserted_types {
            for s in &supers[c.index()] {
                type_bits[x.index()].insert(s.index());
            }
        }
        let instance_types: Vec<Vec<ConceptId>> = type_bits
            .iter()
            .map(|b| b.ones().map(|i| ConceptId(i as u32)).collect())
            .collect();
        let mut extensions = vec![InstanceSet::empty(n_inst); n_conc];
        for (x, types) in instance_types.iter().enumerate() {
            for c in types {
                extensions[c.index()].insert(InstanceId(x as u32));
            }
        }

        let mut role_data: Vec<RoleData> = kinds
            .iter()
            .map(|k| match k {
                RoleKind::Object => RoleData::Object(vec![Vec::new(); n_inst]),
                RoleKind::Numeric => RoleData::Numeric(vec![Vec::new(); n_inst]),
                RoleKind::Boolean => RoleData::Boolean(vec![[false; 2]; n_inst]),
            })
            .collect();
        for (x, r, y) in rels {
            if let RoleData::Object(adj) = &mut role_data[r.index()] {
                adj[x.index()].push(y);
            }
        }
        for (x, r, v) in numbers {
            if let RoleData::Numeric(vals) = &mut role_data[r.index()] {
                vals[x.index()].push(v);
            }
        }
        for (x, r, b) in bools {
            if let RoleData::Boolean(vals) = &mut role_data[r.index()] {
                vals[x.index()][b as usize] = true;
            }
        }
        for data in &mut role_data {
            match data {
                RoleData::Object(adj) => adj.iter_mut().for_each(|v| {
                    v.sort_unstable();
                    v.dedup();
                }),
                RoleData::Numeric(vals) => vals.iter_mut().for_each(|v| {
                    v.sort_unstable_by(f64::total_cmp);
                    v.dedup();
                }),
                RoleData::Boolean(_) => {}
            }
        }

        let mut outgoing: Vec<Vec<Triple>> = vec![Vec::new(); n_inst];
        for (r, data) in role_data.iter().enumerate() {
            let role = RoleId(r as u32);
            for (x, out) in outgoing.iter_mut().enumerate() {
                match data {
                    RoleData::Object(adj) => out.extend(adj[x].iter().map(|&y| Triple {
                        role,
                        object: Value::Instance(y),
                    })),
                    RoleData::Numeric(vals) => out.extend(vals[x].iter().map(|&v| Triple {
                        role,
                        object: Value::Number(v),
                    })),
                    RoleData::Boolean(vals) => {
                        for b in [false, true] {
                            if vals[x][b as usize] {
                                out.push(Triple {
                                    role,
                                    object: Value::Bool(b),
                                });
                            }
                        }
                    }
                }
            }
        }
        for out in &mut outgoing {
            out.sort_by(Triple::sort_key_cmp);
        }

        Ok(KnowledgeBase {
            instances,
            concepts,
            roles,
            subclass_edges,
            extensions,
            instance_types,
            role_data,
            outgoing,
        })
    }

    pub fn num_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn num_concepts(&self) -> usize {
        self.concepts.len()
    }

    pub fn num_roles(&self) -> usize {
        self.roles.len()
    }

    pub fn instance_ids(&self) -> impl Iterator<Item = InstanceId> {
        (0..self.instances.len() as u32).map(InstanceId)
    }

    pub fn concept_ids(&self) -> impl Iterator<Item = ConceptId> {
        (0..self.concepts.len() as u32).map(ConceptId)
    }

    pub fn role_ids(&self) -> impl Iterator<Item = RoleId> {
        (0..self.roles.len() as u32).map(RoleId)
    }

    /// Roles of `kind` in declaration order.
    pub fn roles_of_kind(&self, kind: RoleKind) -> Vec<RoleId> {
        self.role_ids()
            .filter(|r| self.role_data[r.index()].kind() == kind)
            .collect()
    }

    pub fn subclass_edges(&self) -> &[(ConceptId, ConceptId)] {
        &self.subclass_edges
    }

    pub fn instance_id(&self, name: &str) -> Option<InstanceId> {
        self.instances.get_index_of(name).map(|i| InstanceId(i as u32))
    }

    pub fn concept_id(&self, name: &str) -> Option<ConceptId> {
        self.concepts.get_index_of(name).map(|i| ConceptId(i as u32))
    }

    pub fn role_id(&self, name: &str) -> Option<RoleId> {
        self.roles.get_index_of(name).map(|i| RoleId(i as u32))
    }

    pub fn instance_name(&self, id: InstanceId) -> &str {
        &self.instances[id.index()]
    }

    pub fn concept_name(&self, id: ConceptId) -> &str {
        &self.concepts[id.index()]
    }

    pub fn role_name(&self, id: RoleId) -> &str {
        &self.roles[id.index()]
    }

    pub fn role_kind(&self, id: RoleId) -> Result<RoleKind, KbError> {
        self.role_data
            .get(id.index())
            .map(RoleData::kind)
            .ok_or(KbError::UnknownRole(id.0))
    }

    pub fn all_instances(&self) -> InstanceSet {
        InstanceSet::full(self.num_instances())
    }

    /// Extension of an atomic concept, closed under the subclass hierarchy.
    pub fn instances_of(&self, concept: ConceptId) -> Result<&InstanceSet, KbError> {
        self.extensions
            .get(concept.index())
            .ok_or(KbError::UnknownConcept(concept.0))
    }

    /// Asserted types of `x` and all their supertypes, ascending by id.
    pub fn types_of(&self, x: InstanceId) -> Result<&[ConceptId], KbError> {
        self.instance_types
            .get(x.index())
            .map(Vec::as_slice)
            .ok_or(KbError::UnknownInstance(x.0))
    }

    /// Outgoing role assertions of `x`, ordered by role id then object.
    pub fn outgoing_triples(&self, x: InstanceId) -> Result<&[Triple], KbError> {
        self.outgoing
            .get(x.index())
            .map(Vec::as_slice)
            .ok_or(KbError::UnknownInstance(x.0))
    }

    pub fn data_values(&self, x: InstanceId, role: RoleId) -> Result<DataValues<'_>, KbError> {
        self.check_instance(x)?;
        match self.role_data.get(role.index()) {
            None => Err(KbError::UnknownRole(role.0)),
            Some(RoleData::Numeric(vals)) => Ok(DataValues::Numeric(&vals[x.index()])),
            Some(RoleData::Boolean(vals)) => {
                let [f, t] = vals[x.index()];
                let mut out = Vec::with_capacity(2);
                if f {
                    out.push(false);
                }
                if t {
                    out.push(true);
                }
                Ok(DataValues::Boolean(out))
            }
            Some(RoleData::Object(_)) => Err(self.kind_error(role, "a data role")),
        }
    }

    pub fn successors(&self, role: RoleId, x: InstanceId) -> Result<&[InstanceId], KbError> {
        self.check_instance(x)?;
        Ok(&self.object_adjacency(role)?[x.index()])
    }

    /// Per-instance successor lists for an object role.
    pub fn object_adjacency(&self, role: RoleId) -> Result<&[Vec<InstanceId>], KbError> {
        match self.role_data.get(role.index()) {
            None => Err(KbError::UnknownRole(role.0)),
            Some(RoleData::Object(adj)) => Ok(adj),
            Some(_) => Err(self.kind_error(role, "object")),
        }
    }

    /// Per-instance sorted value lists for a numeric role.
    pub fn numeric_table(&self, role: RoleId) -> Result<&[Vec<f64>], KbError> {
        match self.role_data.get(role.index()) {
            None => Err(KbError::UnknownRole(role.0)),
            Some(RoleData::Numeric(vals)) => Ok(vals),
            Some(_) => Err(self.kind_error(role, "numeric")),
        }
    }

    /// Per-instance `[has false, has true]` flags for a boolean role.
    pub fn boolean_table(&self, role: RoleId) -> Result<&[[bool; 2]], KbError> {
        match self.role_data.get(role.index()) {
            None => Err(KbError::UnknownRole(role.0)),
            Some(RoleData::Boolean(vals)) => Ok(vals),
            Some(_) => Err(self.kind_error(role, "boolean")),
        }
    }

    fn check_instance(&self, x: InstanceId) -> Result<(), KbError> {
        if x.index() < self.num_instances() {
            Ok(())
        } else {
            Err(KbError::UnknownInstance(x.0))
        }
    }

    fn kind_error(&self, role: RoleId, expected: &'static str) -> KbError {
        KbError::RoleKind {
            role: self.role_name(role).to_string(),
            expected,
            actual: self.role_data[role.index()].kind(),
        }
    }
}

fn args<'a, const N: usize>(line: usize, toks: &[&'a str]) -> Result<[&'a str; N], KbError> {
    if toks.len() != N + 1 {
        return Err(KbError::Parse {
            line,
            message: format!("`{}` expects {N} argument(s), got {}", toks[0], toks.len() - 1),
        });
    }
    let mut out = [""; N];
    out.copy_from_slice(&toks[1..]);
    Ok(out)
}

fn check_name(line: usize, name: &str) -> Result<(), KbError> {
    if name.contains(RESERVED_CHARS) {
        return Err(KbError::Parse {
            line,
            message: format!("identifier `{name}` contains a reserved character"),
        });
    }
    Ok(())
}

fn declare_role(
    line: usize,
    name: &str,
    kind: RoleKind,
    roles: &mut IndexSet<String>,
    kinds: &mut Vec<RoleKind>,
) -> Result<(), KbError> {
    check_name(line, name)?;
    match roles.get_index_of(name) {
        Some(i) if kinds[i] != kind => Err(KbError::Parse {
            line,
            message: format!("role `{name}` redeclared as {kind} (was {})", kinds[i]),
        }),
        Some(_) => Ok(()),
        None => {
            roles.insert(name.to_string());
            kinds.push(kind);
            Ok(())
        }
    }
}

/// Reflexive-transitive supertypes of every concept; fails on a cycle.
fn supertype_closure(
    parents: &[Vec<ConceptId>],
    names: &IndexSet<String>,
) -> Result<Vec<Vec<ConceptId>>, KbError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Unvisited,
        Active,
        Done,
    }
    let n = parents.len();
    let mut marks = vec![Mark::Unvisited; n];
    let mut closure: Vec<Option<FixedBitSet>> = vec![None; n];

    fn visit(
        c: usize,
        parents: &[Vec<ConceptId>],
        marks: &mut [Mark],
        closure: &mut [Option<FixedBitSet>],
        names: &IndexSet<String>,
    ) -> Result<(), KbError> {
        match marks[c] {
            Mark::Done => return Ok(()),
            Mark::Active => return Err(KbError::SubclassCycle(names[c].clone())),
            Mark::Unvisited => {}
        }
        marks[c] = Mark::Active;
        let mut bits = FixedBitSet::with_capacity(parents.len());
        bits.insert(c);
        for p in &parents[c] {
            visit(p.index(), parents, marks, closure, names)?;
            if let Some(pb) = &closure[p.index()] {
                bits.union_with(pb);
            }
        }
        closure[c] = Some(bits);
        marks[c] = Mark::Done;
        Ok(())
    }

    for c in 0..n {
        visit(c, parents, &mut marks, &mut closure, names)?;
    }
    Ok(closure
        .into_iter()
        .map(|b| {
            b.expect("visited")
                .ones()
                .map(|i| ConceptId(i as u32))
                .collect()
        })
        .collect())
}
