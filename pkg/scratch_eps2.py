# Negative-epsilon sweep: shrink/zero selected weights instead of amplifying.
import numpy as np

from unlearnlab import nn, data, unlearn, metrics

ds = data.generate_blobs(10, 500, 32, 0.5, seed=1234)
cfg_train = unlearn.UnlearnConfig(lam=0.0, max_epochs=200, batch_size=64,
                                  learning_rate=1e-3, patience=15, min_delta=0.0002)

sources = {}
for seed in (0, 1, 2):
    net0 = nn.init_random([32, 64, 64, 10], seed=seed)
    src, _, _ = unlearn.train_source(net0, ds, cfg_train, seed=seed)
    sources[seed] = src

for ratio in (0.05, 0.2):
    for eps in (-1.0, -0.9, -0.5, 1.5):
        for strat in ("top-k", "random-k"):
            rows = []
            for seed in (0, 1, 2):
                src = sources[seed]
                sp = data.split(ds, ratio, seed)
                X_re, y_re = ds.features[sp.remain_indices], ds.labels[sp.remain_indices]
                if strat == "top-k":
                    probe = unlearn.pick_sensitivity_sample(ds, seed)
                    sens = unlearn.sensitivity(src, ds.features[probe:probe+1],
                                               ds.labels[probe:probe+1])
                    plan = unlearn.select_top_k(sens, 45, eps)
                else:
                    plan = unlearn.select_random_k(nn.param_count(src), 0.05, seed, eps)
                store = nn.ParameterStore.from_network(src)
                pstore = unlearn.perturb(store, plan)
                pnet = src.copy(); pstore.apply_to(pnet)
                ce_p = nn.cross_entropy(pnet, X_re, y_re)
                ce_r = nn.cross_entropy(nn.init_random(src.dims(), seed + 1000), X_re, y_re)
                ucfg = unlearn.UnlearnConfig(epsilon=eps)
                out = unlearn.unlearn_finetune(src, ds, sp, ucfg, plan, seed=seed)
                rows.append((out.acc_ul, out.acc_re, ce_p, ce_r, out.epochs_run))
            auls = [r[0] for r in rows]
            are = np.median([r[1] for r in rows])
            cep = max(r[2] for r in rows)
            cer = min(r[3] for r in rows)
            eps_ok = "OK " if cep <= cer else "WARM-FAIL"
            n_drop = sum(1 for a in auls if a < 1.0)
            print(f"ratio={ratio} eps={eps:5} {strat:9s}: acc_ul={['%.4f'%a for a in auls]} "
                  f"({n_drop}/3 drop) med acc_re={are:.4f} maxCE(pert)={cep:7.3f} "
                  f"minCE(rand)={cer:.3f} {eps_ok} epochs={[r[4] for r in rows]}")
