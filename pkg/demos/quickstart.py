"""End-to-end run on a small synthetic dataset.

    python demos/quickstart.py [out_dir]

Generates two matches with planted turnovers, runs every pipeline stage and
prints the headline tables from the resulting report.
"""

import sys

from backline.config import PipelineConfig
from backline.pipeline import run_pipeline
from backline.synthgen import SynthConfig


def main(out_dir: str = "demo_out") -> None:
    cfg = PipelineConfig(
        synth=SynthConfig(n_turnovers=200, clock_shift_ms=400, invalid={"restart": 2, "defensive_third_gate": 2}),
        out_dir=out_dir,
    )
    report = run_pipeline(cfg)

    data = report["data"]
    print(f"{data['n_sequences']} sequences from {data['n_turnovers']} turnovers "
          f"(success rate {data['success_rate']:.1%}), rejects {data['rejects_by_reason']}")
    print(f"sync offsets (ms): {data['sync_offsets_ms']}")
    gt = report["ground_truth"]
    print(f"ground truth: {gt['n_recovered_valid']}/{gt['n_planted_valid']} recovered, ok={gt['ok']}")

    print("\nTwo-way ANOVA (z-scored features)")
    for r in report["stats"]["anova"]:
        print(f"  {r['feature']:<16} {r['source']:<13} F={r['F']:8.3f}  p={r['p_unc']:.4f}  eta2={r['partial_eta_sq']:.3f}")

    print("\nTest-set ROC AUC")
    for team, per in report["models"].items():
        print(f"  team {team}: " + ", ".join(f"{algo} {m['roc_auc']:.3f}" for algo, m in per.items()))

    print("\nImportance ranks (gbdt)")
    for team, per in report["attribution"].items():
        order = sorted(per["gbdt"]["table"], key=lambda r: r["shap_rank"])
        print(f"  team {team}: " + " > ".join(r["feature"] for r in order))
    print(f"\nartifacts written to {out_dir}/")


if __name__ == "__main__":
    main(*sys.argv[1:2])
