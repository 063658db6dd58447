"""Streamlit frontend for the PZF relay beamforming simulator"""
import dataclasses
import logging

import streamlit as st

from src.models.schemas import ExperimentSpec
from src.services.config_loader import PRESETS, preset_spec, parse_config
from src.services.pipeline import ExperimentPipeline, rows_to_csv
from src.utils.errors import ConfigError


logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def init_session_state():
    """Initialize session state variables"""
    if 'results_history' not in st.session_state:
        st.session_state.results_history = []
    if 'last_rows' not in st.session_state:
        st.session_state.last_rows = None


def build_spec(preset: str, document: str, trials: int, seed: int) -> ExperimentSpec:
    """
    Resolve the experiment from a preset or a pasted document

    Args:
        preset: Preset name, or "custom" to parse the document
        document: KEY=VALUE experiment text
        trials: Trial count override
        seed: Master seed override

    Returns:
        ExperimentSpec with the sidebar overrides applied
    """
    spec = parse_config(document) if preset == "custom" else preset_spec(preset)
    return dataclasses.replace(spec, trials=trials, seed=seed)


def display_rows(rows):
    """Display result rows as a table"""
    if not rows:
        st.info("No rows produced")
        return

    failures = sum(r.failures for r in rows)
    if failures:
        st.warning(f"{failures} trial(s) failed and were excluded")
    else:
        st.success(f"{len(rows)} rows produced")

    st.dataframe([r.to_dict() for r in rows], use_container_width=True)
    st.download_button(
        "Download CSV",
        data=rows_to_csv(rows),
        file_name="results.csv",
        mime="text/csv",
    )


def main():
    """Main application"""
    st.set_page_config(
        page_title="PZF Relay Simulator",
        page_icon="📡",
        layout="wide"
    )

    init_session_state()

    st.title("📡 Multi-Way Relay Beamforming Simulator")
    st.markdown("""
    Monte Carlo sum-rate and symbol-error-rate comparison of relay beamformers
    (ZF, MMSE, RZF, MF and partial zero-forcing) in multi-way relay networks.
    """)

    with st.sidebar:
        st.header("Configuration")

        preset = st.selectbox(
            "Experiment",
            options=list(PRESETS) + ["custom"],
            help="Named preset or a custom KEY=VALUE document"
        )
        trials = st.number_input("Trials per grid point", min_value=1, max_value=10000, value=20)
        seed = st.number_input("Master seed", min_value=0, value=0, step=1)
        workers = st.number_input("Worker threads", min_value=1, max_value=32, value=1)

        st.divider()

        st.subheader("About")
        st.markdown("""
        - **Baselines**: ZF, MMSE, RZF, MF transceive beamforming
        - **PZF**: joint, separate and reduced-antenna gradient ascent
        - **Link simulation**: Gray QAM with successive cancellation
        - **Reproducible**: seeded trials, config hash in every row
        """)

        if st.session_state.results_history:
            st.divider()
            st.subheader("Run History")
            st.write(f"Total runs: {len(st.session_state.results_history)}")
            if st.button("Clear History"):
                st.session_state.results_history = []
                st.rerun()

    document = ""
    if preset == "custom":
        document = st.text_area(
            "Experiment document",
            placeholder="experiment = sumrate\nusers = 3\nantennas = 3\ndesigns = ZF,PZF-Separate\nsnr_db = 0:30:10",
            height=200
        )
    else:
        with st.expander("Preset document"):
            st.code(PRESETS[preset].strip())

    run_button = st.button("▶ Run", type="primary", use_container_width=True)

    if run_button:
        try:
            spec = build_spec(preset, document, int(trials), int(seed))
        except ConfigError as e:
            st.error(f"Invalid experiment: {e}")
            return

        st.divider()

        trace_container = st.expander("📋 Simulation Trace", expanded=True)
        trace_placeholder = trace_container.empty()

        traces = []

        def add_trace(message):
            traces.append(f"⏱ {message}")
            trace_placeholder.code("\n".join(traces[-200:]))

        try:
            pipeline = ExperimentPipeline(spec, workers=int(workers))
            with st.spinner("Running trials..."):
                rows = pipeline.run(trace_callback=add_trace)

            st.session_state.last_rows = rows
            st.session_state.results_history.append({
                'experiment': preset,
                'config_hash': pipeline.config_hash,
                'success': True
            })

        except Exception as e:
            add_trace(f"❌ ERROR: {str(e)}")
            st.error(f"Error running experiment: {str(e)}")
            logger.error(f"Simulation error: {str(e)}", exc_info=True)
            st.session_state.results_history.append({
                'experiment': preset,
                'config_hash': None,
                'success': False
            })

    if st.session_state.last_rows is not None:
        st.divider()
        display_rows(st.session_state.last_rows)

    if st.session_state.results_history:
        st.divider()
        st.subheader("Recent Runs")
        for run in reversed(st.session_state.results_history[-5:]):
            status = "✅" if run['success'] else "❌"
            st.caption(f"{status} {run['experiment']} {run['config_hash'] or ''}")


if __name__ == "__main__":
    main()
