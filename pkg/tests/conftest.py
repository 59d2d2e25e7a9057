"""Shared fixtures: the hand-built golden trace and the frozen Zipf trace."""

import pytest

from patchsim import (ContactEvent, PatchPlan, SimParams, SyntheticParams,
                      Trace, generate_synthetic, parse_policy)

# Golden fixture: 4 devices, 2 APs, 6 events, AP 0 patched from t=0.
# With lambda_inf=0.5, lambda_dir=0.25 and seed device 0, the per-device
# compromise probabilities are hand-computable because each device is
# reachable through an independent event set:
#   dev 1: only via event@1 (AP 1)                 -> 0.5
#   dev 2: events @2 and @4 are blocked (AP 0), so only via dev 1 at the
#          direct event@3                          -> 0.5 * 0.25 = 0.125
#   dev 3: via dev 1 at event@5 or dev 0 at the direct event@6
#          -> 0.25 + 0.25 - 0.25*0.25 = 0.4375
# exact_oracle reproduces these exactly (all values are dyadic rationals).
GOLDEN_EXACT = (1.0, 0.5, 0.125, 0.4375)
GOLDEN_SEED_DEVICE = 0


def _golden_events():
    return (
        ContactEvent(1.0, 0, 1, "I", (1,)),
        ContactEvent(2.0, 0, 2, "I", (0,)),
        ContactEvent(3.0, 1, 2, "D"),
        ContactEvent(4.0, 2, 3, "I", (0, 1)),
        ContactEvent(5.0, 1, 3, "I", (1,)),
        ContactEvent(6.0, 0, 3, "D"),
    )


@pytest.fixture
def golden_trace():
    return Trace(devices=4, aps=2, events=_golden_events())


@pytest.fixture
def golden_plan():
    return PatchPlan(patch_time=0.0, patched=frozenset({0}))


def golden_params(trials=1, master_seed=7):
    return SimParams(lambda_inf=0.5, lambda_dir=0.25, trials=trials,
                     master_seed=master_seed)


# Frozen synthetic fixture with heavy-tailed AP popularity (AP 0 hottest).
# Parameters were frozen after first confirming the qualitative trends the
# acceptance suite checks; ~2000 events keeps 500-trial cells fast.
ZIPF_PARAMS = SyntheticParams(n_devices=50, n_aps=200, duration=4000.0,
                              contact_rate=0.01, direct_fraction=0.2,
                              ap_zipf_alpha=1.2, max_path_len=3, seed=20240810)
ZIPF_LAMBDA_INF = 0.05
ZIPF_LAMBDA_DIR = 0.01
ZIPF_MASTER_SEED = 42


@pytest.fixture(scope="session")
def zipf_trace():
    return generate_synthetic(ZIPF_PARAMS)


def zipf_params(policy="none", patch_time=0.0, patch_fraction=0.0, trials=500,
                lambda_inf=ZIPF_LAMBDA_INF, lambda_dir=ZIPF_LAMBDA_DIR):
    return SimParams(lambda_inf=lambda_inf, lambda_dir=lambda_dir,
                     patch_time=patch_time, patch_fraction=patch_fraction,
                     policy=parse_policy(policy), trials=trials,
                     master_seed=ZIPF_MASTER_SEED)
