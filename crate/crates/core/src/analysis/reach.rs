use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::snapshot::{Dialect, HeapObject, Snapshot};

/// Ids of heap objects reachable from any stack variable (all frames) or
/// global by following reference fields transitively.
pub fn reachable_heap(snapshot: &Snapshot) -> BTreeSet<String> {
    let objects = index(snapshot);
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<&str> = snapshot
        .root_variables()
        .filter_map(|v| v.value.as_ref_id())
        .collect();
    while let Some(id) = queue.pop_front() {
        let Some(obj) = objects.get(id) else { continue };
        if !seen.insert(id.to_string()) {
            continue;
        }
        queue.extend(obj.fields.iter().filter_map(|f| f.value.as_ref_id()));
    }
    seen
}

/// Display names for heap objects.
///
/// An object pointed at directly by stack or global variables is named by
/// those variables (sorted, deduplicated). An object reachable only through
/// other objects gets a single path name such as `head.next.next` (java) or
/// `head->next` (cpp): the shortest path, ties broken by the lexicographic
/// order of the parent's name and then field declaration order. Objects that
/// are not reachable are absent from the map.
pub fn heap_reference_names(snapshot: &Snapshot) -> BTreeMap<String, Vec<String>> {
    let objects = index(snapshot);
    let separator = match snapshot.language {
        Dialect::Java => ".",
        Dialect::Cpp => "->",
    };

    let mut names: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for var in snapshot.root_variables() {
        if let Some(id) = var.value.as_ref_id() {
            if objects.contains_key(id) {
                names.entry(id.to_string()).or_default().push(var.name.clone());
            }
        }
    }
    for list in names.values_mut() {
        list.sort();
        list.dedup();
    }

    let mut level: Vec<(String, &str)> = names
        .iter()
        .map(|(id, list)| (list[0].clone(), objects[id.as_str()].id.as_str()))
        .collect();
    while !level.is_empty() {
        level.sort();
        let mut next = Vec::new();
        for (label, id) in &level {
            for field in &objects[id].fields {
                let Some(target) = field.value.as_ref_id() else { continue };
                let Some(obj) = objects.get(target) else { continue };
                if names.contains_key(target) {
                    continue;
                }
                let path = format!("{label}{separator}{}", field.name);
                names.insert(target.to_string(), vec![path.clone()]);
                next.push((path, obj.id.as_str()));
            }
        }
        level = next;
    }
    names
}

/// Returns a copy of the snapshot with every heap object's `referencedBy`
/// recomputed from the current stack and globals.
pub fn annotate_heap_names(snapshot: &Snapshot) -> Snapshot {
    let mut names = heap_reference_names(snapshot);
    let mut out = snapshot.clone();
    for obj in &mut out.heap {
        obj.referenced_by = names.remove(&obj.id).unwrap_or_default();
    }
    out
}

fn index(snapshot: &Snapshot) -> HashMap<&str, &HeapObject> {
    snapshot.heap.iter().map(|o| (o.id.as_str(), o)).collect()
}
