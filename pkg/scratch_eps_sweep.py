# Sweep epsilon to find a fixture default where unlearning measurably bites
# without breaking the warm-start property.
import numpy as np

from unlearnlab import nn, data, unlearn, metrics

ds = data.generate_blobs(10, 500, 32, 0.5, seed=1234)
cfg_train = unlearn.UnlearnConfig(lam=0.0, max_epochs=200, batch_size=64,
                                  learning_rate=1e-3, patience=15, min_delta=0.0002)

sources = {}
for seed in (0, 1, 2):
    net0 = nn.init_random([32, 64, 64, 10], seed=seed)
    src, ep, _ = unlearn.train_source(net0, ds, cfg_train, seed=seed)
    sources[seed] = src
    print(f"seed {seed}: source epochs={ep} "
          f"train_acc={metrics.accuracy(src, ds.features, ds.labels):.4f}")

for ratio in (0.05, 0.2):
    for eps in (0.05, 0.3, 1.0, 2.0, 4.0):
        for strat in ("top-k", "random-k"):
            rows = []
            for seed in (0, 1, 2):
                src = sources[seed]
                sp = data.split(ds, ratio, seed)
                X_ul, y_ul = ds.features[sp.unlearn_indices], ds.labels[sp.unlearn_indices]
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
            aul = np.median([r[0] for r in rows])
            are = np.median([r[1] for r in rows])
            cep = max(r[2] for r in rows)
            cer = min(r[3] for r in rows)
            eps_ok = "OK " if cep <= cer else "WARM-FAIL"
            drop = "DROP" if aul < 1.0 else "flat"
            print(f"ratio={ratio} eps={eps:4} {strat:9s}: med acc_ul={aul:.4f} ({drop}) "
                  f"med acc_re={are:.4f} maxCE(pert)={cep:7.3f} minCE(rand)={cer:.3f} {eps_ok} "
                  f"epochs={[r[4] for r in rows]}")
