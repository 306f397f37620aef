macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));
        }
    };
}

example!(ltl_automaton);
example!(model_text_format);
example!(end_components);
example!(rocksample_check);
example!(upper_bound_baselines);
example!(monte_carlo);
example!(policy_file);
example!(benchmark_suite);
example!(drone_domain);

#[test]
fn ltl_automaton_runs() {
    ltl_automaton::run_example().expect("ltl_automaton");
}

#[test]
fn model_text_format_runs() {
    model_text_format::run_example().expect("model_text_format");
}

#[test]
fn end_components_runs() {
    end_components::run_example().expect("end_components");
}

#[test]
fn rocksample_check_runs() {
    rocksample_check::run_example().expect("rocksample_check");
}

#[test]
fn upper_bound_baselines_runs() {
    upper_bound_baselines::run_example().expect("upper_bound_baselines");
}

#[test]
fn monte_carlo_runs() {
    monte_carlo::run_example().expect("monte_carlo");
}

#[test]
fn policy_file_runs() {
    policy_file::run_example().expect("policy_file");
}

#[test]
fn benchmark_suite_runs() {
    benchmark_suite::run_example().expect("benchmark_suite");
}

#[test]
fn drone_domain_runs() {
    drone_domain::run_example().expect("drone_domain");
}
