//! Merging of attributes whose normalized names contain one another
//! ("type" ⊆ "product type"), computed to a fixed point.

use std::collections::{BTreeMap, BTreeSet};

use crate::kg_store::AttributeDef;

fn token_set(attr: &AttributeDef) -> BTreeSet<&str> {
    attr.name.iter().map(String::as_str).collect()
}

/// Merges attributes whose name token sets are subset-related. The
/// attribute with the fewer-token (more general) name survives, its
/// value set becomes the union, and the process repeats until no pair
/// is subset-related. Survivor choice ties break lexicographically, so
/// the result does not depend on input order.
pub fn merge_attributes(attrs: Vec<AttributeDef>) -> Vec<AttributeDef> {
    merge_attributes_with_map(attrs).0
}

/// Like [`merge_attributes`], also returning the redirect map from every
/// original name key to the name key that survived for it.
pub fn merge_attributes_with_map(
    attrs: Vec<AttributeDef>,
) -> (Vec<AttributeDef>, BTreeMap<String, String>) {
    let mut attrs = attrs;
    let mut redirect: BTreeMap<String, String> = attrs
        .iter()
        .map(|a| (a.name_key(), a.name_key()))
        .collect();

    loop {
        attrs.sort_by(|a, b| {
            (a.name.len(), a.name_key()).cmp(&(b.name.len(), b.name_key()))
        });
        let mut merged = None;
        'scan: for i in 0..attrs.len() {
            for j in 0..attrs.len() {
                if i == j {
                    continue;
                }
                if token_set(&attrs[i]).is_subset(&token_set(&attrs[j])) {
                    merged = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((keep, absorb)) = merged else { break };
        let absorbed = attrs.remove(absorb);
        let keep_idx = if absorb < keep { keep - 1 } else { keep };
        let survivor = &mut attrs[keep_idx];
        redirect.insert(absorbed.name_key(), survivor.name_key());
        let mut values: BTreeSet<String> = survivor.values.iter().cloned().collect();
        values.extend(absorbed.values.iter().cloned());
        survivor.values = values.into_iter().collect();
    }

    // Collapse redirect chains (a→b, b→c ⇒ a→c).
    let keys: Vec<String> = redirect.keys().cloned().collect();
    for key in keys {
        let mut target = redirect[&key].clone();
        while redirect[&target] != target {
            target = redirect[&target].clone();
        }
        redirect.insert(key, target);
    }
    (attrs, redirect)
}
