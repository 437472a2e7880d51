//! Cross-module properties of compilation and translation.

use std::collections::HashSet;

use iompp::compiler::{compile_mpp, compile_pp, Family};
use iompp::execution::{reachable, ExploreOptions};
use iompp::format::{parse_compiled, write_compiled};
use iompp::library;
use iompp::model::{Configuration, MediatedConfiguration, Population};
use iompp::translation::{cleanup_schedule, is_translated_form, SourcePopulation};
use proptest::prelude::*;

fn arb_input(max_n: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["0", "1"]), 2..=max_n)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

/// Independent count of generated instances before merging: one each of
/// t1, t2, t3, |Q'| of t4 and |Q'| * (|S'| - 1) of t5.
fn expected_raw(q: usize, transitions: usize) -> usize {
    let q_prime = 2 * q;
    let s_prime = 2 + q;
    transitions * (3 + q_prime + q_prime * (s_prime - 1))
}

#[test]
fn raw_instance_counts() {
    assert_eq!(expected_raw(2, 1), 19);
    assert_eq!(expected_raw(3, 3), 99);
    for entry in library::plain_entries() {
        let pc = compile_pp(&entry.spec, false).unwrap();
        let raw: usize = pc.provenance().iter().map(|p| p.sources.len()).sum();
        assert_eq!(raw, expected_raw(entry.spec.states().len(), entry.spec.transitions().len()));
        assert!(pc.spec().is_immediate_observation());
    }
}

#[test]
fn compiled_files_round_trip() {
    for entry in library::all_entries() {
        let pc = if entry.spec.is_mediated() {
            compile_mpp(&entry.spec).unwrap()
        } else {
            compile_pp(&entry.spec, false).unwrap()
        };
        let text = write_compiled(&pc);
        let back = parse_compiled(&entry.spec, &text).unwrap();
        assert_eq!(back.spec(), pc.spec());
        assert_eq!(back.provenance(), pc.provenance());
        assert_eq!(write_compiled(&back), text);
    }
}

/// With the shortcut, an IO source and its compilation have the same
/// reachable configurations up to translation.
#[test]
fn shortcut_reachability_is_the_translated_source_reachability() {
    let src = library::detect_one().spec;
    let pc = compile_pp(&src, true).unwrap();
    let opts = ExploreOptions::default();
    for n in 2..=4 {
        for inp in iompp::execution::inputs_of_length(src.alphabet(), n) {
            let c0 = Configuration::initial(&src, &inp).unwrap();
            let g = reachable(&src, &c0, &opts).unwrap();
            let h = reachable(pc.spec(), &c0.translate(&pc).unwrap(), &opts).unwrap();
            let images: HashSet<MediatedConfiguration> =
                g.nodes().map(|(_, c)| c.translate(&pc).unwrap()).collect();
            let compiled: HashSet<MediatedConfiguration> = h.nodes().map(|(_, d)| d.clone()).collect();
            assert_eq!(images, compiled, "{inp:?}");
            assert_eq!(g.edge_count(), h.edge_count(), "{inp:?}");
        }
    }
}

proptest! {
    #[test]
    fn translate_is_injective(a in arb_input(4), b in arb_input(4)) {
        let src = library::threshold2().spec;
        let pc = compile_pp(&src, false).unwrap();
        let ca = Configuration::initial(&src, &a).unwrap();
        let cb = Configuration::initial(&src, &b).unwrap();
        prop_assert_eq!(ca == cb, ca.translate(&pc).unwrap() == cb.translate(&pc).unwrap());
        prop_assert_eq!(Configuration::normalize(&ca.translate(&pc).unwrap(), &pc), ca);
    }

    #[test]
    fn cleanup_of_random_runs_reaches_translated_form(inp in arb_input(4), seed in any::<u64>(), len in 0usize..60) {
        let src = library::threshold2().spec;
        let pc = compile_pp(&src, false).unwrap();
        let c0 = Configuration::initial(&src, &inp).unwrap();
        let run = iompp::execution::run_random(pc.spec(), &c0.translate(&pc).unwrap(), seed, len);
        let d = run.last();
        let sched = cleanup_schedule(d, &pc).unwrap();
        prop_assert!(is_translated_form(&sched.endpoint, &pc));
        prop_assert_eq!(sched.endpoint, Configuration::normalize(d, &pc).translate(&pc).unwrap());
        for step in &sched.steps {
            prop_assert!(matches!(pc.family(step.transition), Family::T3 | Family::T4 | Family::T5));
        }
    }

    #[test]
    fn mediated_cleanup_of_random_runs(inp in arb_input(3), seed in any::<u64>(), len in 0usize..40) {
        let src = library::detect_one_once().spec;
        let pc = compile_mpp(&src).unwrap();
        let c0 = MediatedConfiguration::initial(&src, &inp).unwrap();
        let run = iompp::execution::run_random(pc.spec(), &c0.translate(&pc).unwrap(), seed, len);
        let d = run.last();
        let sched = cleanup_schedule(d, &pc).unwrap();
        prop_assert_eq!(sched.endpoint, MediatedConfiguration::normalize(d, &pc).translate(&pc).unwrap());
    }
}
