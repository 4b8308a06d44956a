#pragma once

#include "ffd/core/error.hpp"
#include "ffd/core/hash.hpp"
#include "ffd/core/labels.hpp"
#include "ffd/core/tensor.hpp"
#include "ffd/dataset/batch_io.hpp"
#include "ffd/dataset/batching.hpp"
#include "ffd/dataset/frame.hpp"
#include "ffd/dataset/manifest.hpp"
#include "ffd/dataset/subsequence.hpp"
#include "ffd/eval/confusion.hpp"
#include "ffd/eval/det.hpp"
#include "ffd/eval/kde.hpp"
#include "ffd/eval/metrics.hpp"
#include "ffd/eval/report.hpp"
#include "ffd/eval/scores.hpp"
#include "ffd/eval/svg.hpp"
#include "ffd/model/checkpoint.hpp"
#include "ffd/model/cnn_lstm.hpp"
#include "ffd/model/layer_spec.hpp"
#include "ffd/model/layers.hpp"
#include "ffd/run/commands.hpp"
#include "ffd/run/config.hpp"
#include "ffd/synth/dynamics.hpp"
#include "ffd/synth/generator.hpp"
#include "ffd/synth/image_io.hpp"
#include "ffd/train/adam.hpp"
#include "ffd/train/loss.hpp"
#include "ffd/train/trainer.hpp"
