//! Every example under `examples/` runs to completion.

macro_rules! example {
    ($module:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $module() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(decompose, "decompose.rs");
example!(universal_dilation, "universal_dilation.rs");
example!(global_dynamics, "global_dynamics.rs");
example!(simulate_chain, "simulate_chain.rs");
example!(inhomogeneous_markov, "inhomogeneous_markov.rs");
example!(quantum_extension, "quantum_extension.rs");
example!(qp_dilation_flow, "qp_dilation_flow.rs");
example!(classical_quantum_agreement, "classical_quantum_agreement.rs");
