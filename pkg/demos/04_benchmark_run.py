# A desk-scale pass over the six benchmark models: a handful of tuned
# repetitions per model at moderate noise, reporting structure accuracy,
# reconstruction error, and the mean principal angles of the recovered
# loading and score subspaces.

from psidecomp import model_preset
from psidecomp.simgen import run_repetitions, summarize

REPS = 5
SNR = 15.0

print(f"{REPS} tuned repetitions per model at snr {SNR:g}, n = p_k = 100\n")
print(f"{'model':42s} {'acc %':>6s} {'rse':>7s} {'theta_U':>8s} {'theta_W':>8s} {'ms/rep':>7s}")
for mid in range(1, 7):
    model = model_preset(mid, snr=SNR, n=100, block_size=100)
    outs = run_repetitions(model, REPS, seed=500 + 10 * mid, threads=1)
    s = summarize(outs)
    print(f"{s['model']:42s} {s['accuracy_percent']:6.0f} "
          f"{s['rse']['mean']:7.3f} {s['theta_U']['mean']:8.2f} "
          f"{s['theta_W']['mean']:8.2f} {s['wall_ms']['mean']:7.0f}")
