#pragma once

// Everything except the CLI front end.
#include "tdanet/detection.hpp"
#include "tdanet/util/hash.hpp"
#include "tdanet/grad/tensor.hpp"
#include "tdanet/grad/graph.hpp"
#include "tdanet/grad/ops.hpp"
#include "tdanet/grad/layers.hpp"
#include "tdanet/grad/params.hpp"
#include "tdanet/grad/optim.hpp"
#include "tdanet/grad/check.hpp"
#include "tdanet/embed/catalog.hpp"
#include "tdanet/embed/embeddings.hpp"
#include "tdanet/model/inputs.hpp"
#include "tdanet/model/tdanet.hpp"
#include "tdanet/sim/scene.hpp"
#include "tdanet/sim/agent.hpp"
#include "tdanet/sim/camera.hpp"
#include "tdanet/sim/parents.hpp"
#include "tdanet/sim/reward.hpp"
#include "tdanet/sim/paths.hpp"
#include "tdanet/sim/episode.hpp"
#include "tdanet/sim/generate.hpp"
#include "tdanet/rl/a3c.hpp"
#include "tdanet/rl/rollout.hpp"
#include "tdanet/rl/checkpoint.hpp"
#include "tdanet/rl/metrics.hpp"
#include "tdanet/rl/train.hpp"
#include "tdanet/eval/metrics.hpp"
#include "tdanet/eval/evaluate.hpp"
#include "tdanet/eval/zero_shot.hpp"
#include "tdanet/eval/ablation.hpp"
#include "tdanet/eval/attention_dump.hpp"
#include "tdanet/config/run_config.hpp"
