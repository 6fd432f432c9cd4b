"""Golfing construction of a dual certificate.

With full sampling every golfing step succeeds and the certificate
conditions can be checked directly. At the default schedule for a
partial budget the late batches are too thin and the construction
fails, which is reported as data.
"""
from framecs.certificate import certificate_summary, certificate_trials
from framecs.transforms import dft_matrix, haar_frame_redundant

V, D = dft_matrix(32), haar_frame_redundant(5)
for q, mu, nu in ((1.0, 10, 6), (0.9, None, None)):
    res = certificate_trials(V, D, 3, q, 5, seed=0, mu=mu, nu=nu, kappa_trials=50)
    s = certificate_summary(res)
    rates = {k: round(v, 2) for k, v in s["conditions"].items()}
    print(f"q={q}: mu={s['mu']} nu={s['nu']} success={s['success_rate']:.2f} "
          f"algebra={s['algebra_rate']:.2f} conditions={rates}")
