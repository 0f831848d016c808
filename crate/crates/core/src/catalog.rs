//! Flat relational storage, query schemas, attribute classes and statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::query::Query;
use crate::value::{Domain, Value};

/// Index of an attribute within a [`Schema`].
pub type AttrId = u32;

/// An attribute of one relation atom of a query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attribute {
    /// Name of the atom the attribute belongs to (the relation name unless the
    /// query aliases it).
    pub atom: String,
    pub name: String,
    /// Stored relation and column the attribute reads from.
    pub relation: String,
    pub column: usize,
    pub domain: Option<Domain>,
}

/// One relation atom of a query: the unit of dependence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub name: String,
    pub relation: String,
    pub attrs: Vec<AttrId>,
}

/// The attributes and relation atoms a query (or an f-tree) ranges over.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    attrs: Vec<Attribute>,
    atoms: Vec<Atom>,
    attr_atom: Vec<usize>,
    qualified: Vec<String>,
    index: HashMap<String, AttrId>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a schema whose atoms read from stored relations of the same name.
    pub fn from_atoms(atoms: &[(&str, &[&str])]) -> Arc<Schema> {
        let mut s = Schema::new();
        for (name, attrs) in atoms {
            s.add_atom(name, name, attrs.iter().map(|a| a.to_string()).collect(), None)
                .expect("duplicate attribute in schema literal");
        }
        Arc::new(s)
    }

    pub fn add_atom(
        &mut self,
        name: &str,
        relation: &str,
        attrs: Vec<String>,
        domains: Option<Vec<Domain>>,
    ) -> Result<usize> {
        if self.atoms.len() >= 64 {
            return Err(Error::Other("at most 64 relation atoms are supported".into()));
        }
        if self.atoms.iter().any(|a| a.name == name) {
            return Err(Error::Other(format!("duplicate relation atom `{name}`")));
        }
        let atom_idx = self.atoms.len();
        let mut ids = Vec::with_capacity(attrs.len());
        for (column, attr) in attrs.into_iter().enumerate() {
            let qualified = format!("{name}.{attr}");
            if self.index.contains_key(&qualified) {
                return Err(Error::Other(format!("duplicate attribute `{qualified}`")));
            }
            let id = self.attrs.len() as AttrId;
            self.attrs.push(Attribute {
                atom: name.to_owned(),
                name: attr,
                relation: relation.to_owned(),
                column,
                domain: domains.as_ref().map(|d| d[column]),
            });
            self.attr_atom.push(atom_idx);
            self.index.insert(qualified.clone(), id);
            self.qualified.push(qualified);
            ids.push(id);
        }
        self.atoms.push(Atom {
            name: name.to_owned(),
            relation: relation.to_owned(),
            attrs: ids,
        });
        Ok(atom_idx)
    }

    pub fn attr(&self, id: AttrId) -> &Attribute {
        &self.attrs[id as usize]
    }

    pub fn attr_count(&self) -> usize {
        self.attrs.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom_of(&self, id: AttrId) -> usize {
        self.attr_atom[id as usize]
    }

    /// `Atom.attr` name of an attribute.
    pub fn qualified(&self, id: AttrId) -> &str {
        &self.qualified[id as usize]
    }

    pub fn lookup(&self, qualified: &str) -> Result<AttrId> {
        self.index
            .get(qualified)
            .copied()
            .ok_or_else(|| Error::UnknownAttribute(qualified.to_owned()))
    }

    /// Class identifier used by the text formats: member names sorted and
    /// joined with `=`.
    pub fn class_id(&self, members: &[AttrId]) -> String {
        let mut names: Vec<&str> = members.iter().map(|&a| self.qualified(a)).collect();
        names.sort_unstable();
        names.join("=")
    }

    pub(crate) fn set_domain(&mut self, id: AttrId, domain: Domain) {
        self.attrs[id as usize].domain = Some(domain);
    }
}

/// A stored relation. Rows may repeat; evaluation uses set semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    name: String,
    columns: Vec<String>,
    domains: Vec<Domain>,
    rows: Vec<Vec<Value>>,
}

impl Relation {
    /// Builds a relation, checking arity and column homogeneity. Columns of
    /// an empty relation default to the integer domain.
    pub fn new(name: &str, columns: Vec<String>, rows: Vec<Vec<Value>>) -> Result<Relation> {
        let mut domains: Vec<Option<Domain>> = vec![None; columns.len()];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::Arity {
                    relation: name.to_owned(),
                    line: i + 2,
                    expected: columns.len(),
                    found: row.len(),
                });
            }
            for (c, v) in row.iter().enumerate() {
                match domains[c] {
                    None => domains[c] = Some(v.domain()),
                    Some(d) if d != v.domain() => {
                        return Err(Error::MixedDomain {
                            relation: name.to_owned(),
                            column: columns[c].clone(),
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(Relation {
            name: name.to_owned(),
            domains: domains.into_iter().map(|d| d.unwrap_or(Domain::Int)).collect(),
            columns,
            rows,
        })
    }

    /// Parses the tab-separated relation format. `source` names the input in
    /// error messages; `declared`, when given, must match the header columns.
    pub fn parse(text: &str, source: &str, declared: Option<&[String]>) -> Result<Relation> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#'));
        let (header_no, header) = lines
            .by_ref()
            .find(|(_, l)| !l.is_empty())
            .ok_or_else(|| Error::parse(source, 1, 1, "missing header line"))?;
        let mut fields = header.split('\t');
        let name = fields.next().unwrap_or_default();
        if name.is_empty() {
            return Err(Error::parse(source, header_no + 1, 1, "empty relation name"));
        }
        let columns: Vec<String> = fields.map(str::to_owned).collect();
        if let Some(pos) = columns.iter().position(|c| c.is_empty()) {
            return Err(Error::parse(
                source,
                header_no + 1,
                column_of(header, pos + 1),
                "empty attribute name",
            ));
        }
        if let Some(declared) = declared {
            if declared != columns.as_slice() {
                return Err(Error::parse(
                    source,
                    header_no + 1,
                    1,
                    format!("header declares ({}), expected ({})", columns.join(","), declared.join(",")),
                ));
            }
        }

        let mut domains: Vec<Option<Domain>> = vec![None; columns.len()];
        let mut rows = Vec::new();
        for (no, line) in lines {
            if line.is_empty() {
                continue;
            }
            let values: Vec<&str> = line.split('\t').collect();
            if values.len() != columns.len() {
                return Err(Error::Arity {
                    relation: name.to_owned(),
                    line: no + 1,
                    expected: columns.len(),
                    found: values.len(),
                });
            }
            let mut row = Vec::with_capacity(values.len());
            for (c, tok) in values.iter().enumerate() {
                if tok.is_empty() {
                    return Err(Error::parse(source, no + 1, column_of(line, c), "empty value"));
                }
                let v = Value::from_token(tok);
                match domains[c] {
                    None => domains[c] = Some(v.domain()),
                    Some(d) if d != v.domain() => {
                        return Err(Error::MixedDomain {
                            relation: name.to_owned(),
                            column: columns[c].clone(),
                        })
                    }
                    _ => {}
                }
                row.push(v);
            }
            rows.push(row);
        }
        Ok(Relation {
            name: name.to_owned(),
            columns,
            domains: domains.into_iter().map(|d| d.unwrap_or(Domain::Int)).collect(),
            rows,
        })
    }

    /// Renders the relation in the tab-separated file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.name);
        for c in &self.columns {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push('\t');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn distinct_count(&self, column: usize) -> u64 {
        let set: BTreeSet<&Value> = self.rows.iter().map(|r| &r[column]).collect();
        set.len() as u64
    }
}

/// 1-based character column where tab-separated field `field` starts.
fn column_of(line: &str, field: usize) -> usize {
    let mut col = 1;
    for (i, part) in line.split('\t').enumerate() {
        if i == field {
            return col;
        }
        col += part.chars().count() + 1;
    }
    col
}

pub fn load_relation(path: &Path, declared: Option<&[String]>) -> Result<Relation> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Relation::parse(&text, &path.display().to_string(), declared)
}

/// Cardinality statistics used by the estimate-based cost model.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Catalogue {
    row_count: BTreeMap<String, u64>,
    distinct: BTreeMap<(String, String), u64>,
    columns: BTreeMap<String, Vec<String>>,
}

impl Catalogue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records exact statistics for a relation.
    pub fn add_relation(&mut self, rel: &Relation) {
        self.row_count.insert(rel.name.clone(), rel.len() as u64);
        self.columns.insert(rel.name.clone(), rel.columns.clone());
        for (c, col) in rel.columns.iter().enumerate() {
            self.distinct
                .insert((rel.name.clone(), col.clone()), rel.distinct_count(c));
        }
    }

    pub fn row_count(&self, relation: &str) -> Option<u64> {
        self.row_count.get(relation).copied()
    }

    pub fn distinct(&self, relation: &str, column: &str) -> Option<u64> {
        self.distinct
            .get(&(relation.to_owned(), column.to_owned()))
            .copied()
    }

    /// Distinct count of the `column`-th column of a relation, falling back
    /// to the column named `name` when the relation's layout is unknown.
    pub fn distinct_at(&self, relation: &str, column: usize, name: &str) -> Option<u64> {
        let col = self
            .columns
            .get(relation)
            .and_then(|c| c.get(column))
            .map(String::as_str)
            .unwrap_or(name);
        self.distinct(relation, col)
    }

    pub fn set_row_count(&mut self, relation: &str, n: u64) {
        self.row_count.insert(relation.to_owned(), n);
    }

    pub fn set_distinct(&mut self, relation: &str, column: &str, n: u64) {
        self.distinct
            .insert((relation.to_owned(), column.to_owned()), n);
    }

    /// Applies an override file: lines `R<TAB>rows` or `R.A<TAB>distinct`.
    pub fn apply_overrides(&mut self, text: &str, source: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(source, no + 1, 1, "expected KEY<TAB>COUNT"))?;
            let n: u64 = count.trim().parse().map_err(|_| {
                Error::parse(source, no + 1, key.chars().count() + 2, "count is not a natural number")
            })?;
            match key.split_once('.') {
                Some((rel, col)) => self.set_distinct(rel, col, n),
                None => self.set_row_count(key, n),
            }
        }
        Ok(())
    }
}

/// Named stored relations plus their statistics.
#[derive(Clone, Debug, Default)]
pub struct Database {
    relations: BTreeMap<String, Relation>,
    stats: Catalogue,
}

pub const CATALOGUE_FILE: &str = "catalogue.stats";

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, rel: Relation) {
        self.stats.add_relation(&rel);
        self.relations.insert(rel.name.clone(), rel);
    }

    /// Loads every `*.tsv` file of a directory, then the optional
    /// `catalogue.stats` override file.
    pub fn load_dir(dir: &Path) -> Result<Database> {
        let mut entries: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
            .collect();
        entries.sort();
        let mut db = Database::new();
        for path in entries {
            db.insert(load_relation(&path, None)?);
        }
        let overrides = dir.join(CATALOGUE_FILE);
        if overrides.exists() {
            let text = fs::read_to_string(&overrides).map_err(|e| Error::io(&overrides, e))?;
            db.stats
                .apply_overrides(&text, &overrides.display().to_string())?;
        }
        Ok(db)
    }

    pub fn relation(&self, name: &str) -> Result<&Relation> {
        self.relations
            .get(name)
            .ok_or_else(|| Error::UnknownRelation(name.to_owned()))
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }

    pub fn stats(&self) -> &Catalogue {
        &self.stats
    }

    pub fn stats_mut(&mut self) -> &mut Catalogue {
        &mut self.stats
    }

    /// |D|: the total number of values stored.
    pub fn size(&self) -> usize {
        self.relations.values().map(|r| r.len() * r.arity()).sum()
    }
}

/// A set of attributes made equal by the query's attribute equalities.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributeClass {
    pub members: Vec<AttrId>,
}

/// The classes touched by one relation atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencySet {
    pub source: String,
    /// Indices into the class list the set was computed from.
    pub classes: Vec<usize>,
}

/// Partitions the query's attributes into the transitive closure of its
/// attribute equalities. Classes are sorted by smallest member.
pub fn equivalence_classes(query: &Query) -> Vec<AttributeClass> {
    let n = query.schema().attr_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut x = x;
        while p[x] != r {
            let next = p[x];
            p[x] = r;
            x = next;
        }
        r
    }
    for &(a, b) in query.equalities() {
        let (ra, rb) = (find(&mut parent, a as usize), find(&mut parent, b as usize));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<AttrId>> = BTreeMap::new();
    for a in 0..n {
        let r = find(&mut parent, a);
        groups.entry(r).or_default().push(a as AttrId);
    }
    groups
        .into_values()
        .map(|members| AttributeClass { members })
        .collect()
}

/// One dependency set per relation atom, listing the classes its attributes
/// fall into.
pub fn dependency_sets(query: &Query, classes: &[AttributeClass]) -> Vec<DependencySet> {
    let schema = query.schema();
    let mut class_of = vec![usize::MAX; schema.attr_count()];
    for (i, c) in classes.iter().enumerate() {
        for &m in &c.members {
            class_of[m as usize] = i;
        }
    }
    schema
        .atoms()
        .iter()
        .map(|atom| {
            let set: BTreeSet<usize> = atom.attrs.iter().map(|&a| class_of[a as usize]).collect();
            DependencySet {
                source: atom.name.clone(),
                classes: set.into_iter().collect(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const ORDERS: &str = "Orders\toid\titem\n01\tMilk\n01\tCheese\n02\tMelon\n03\tCheese\n03\tMelon\n";

    #[test]
    fn loads_orders_with_exact_statistics() {
        let rel = Relation::parse(ORDERS, "Orders.tsv", None).unwrap();
        assert_eq!(rel.len(), 5);
        let mut cat = Catalogue::new();
        cat.add_relation(&rel);
        assert_eq!(cat.row_count("Orders"), Some(5));
        assert_eq!(cat.distinct("Orders", "item"), Some(3));
        assert_eq!(cat.distinct("Orders", "oid"), Some(3));
        assert_eq!(rel.domains(), &[Domain::Str, Domain::Str]);
    }

    #[test]
    fn header_only_gives_empty_relation() {
        let rel = Relation::parse("R\tA\tB\n", "R.tsv", None).unwrap();
        assert!(rel.is_empty());
        assert_eq!(rel.arity(), 2);
    }

    #[test]
    fn extra_value_is_an_arity_error() {
        let err = Relation::parse("Orders\toid\titem\n01\tMilk\textra\n", "x", None).unwrap_err();
        match err {
            Error::Arity { line, expected, found, .. } => {
                assert_eq!((line, expected, found), (2, 2, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mixed_domains_are_rejected() {
        let err = Relation::parse("R\tA\n1\nMilk\n", "x", None).unwrap_err();
        assert!(matches!(err, Error::MixedDomain { .. }));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let rel = Relation::parse("# c\nR\tA\n\n1\n# 2\n3\n", "x", None).unwrap();
        assert_eq!(rel.rows(), &[vec![Value::Int(1)], vec![Value::Int(3)]]);
    }

    #[test]
    fn empty_value_reports_column() {
        let err = Relation::parse("R\tA\tB\nab\t\n", "x", None).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 4)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reload_is_stable() {
        let a = Relation::parse(ORDERS, "x", None).unwrap();
        let b = Relation::parse(&a.to_text(), "x", None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_text(), ORDERS);
    }

    #[test]
    fn overrides() {
        let mut cat = Catalogue::new();
        cat.apply_overrides("R\t10\nR.A\t4\n", "o").unwrap();
        assert_eq!(cat.row_count("R"), Some(10));
        assert_eq!(cat.distinct("R", "A"), Some(4));
        assert!(cat.apply_overrides("R\tmany\n", "o").unwrap_err().is_parse());
    }
}
