#pragma once

#include "beatscribe/align.hpp"
#include "beatscribe/audio.hpp"
#include "beatscribe/core.hpp"
#include "beatscribe/errors.hpp"
#include "beatscribe/eval.hpp"
#include "beatscribe/features.hpp"
#include "beatscribe/htparse.hpp"
#include "beatscribe/labeler/checkpoint.hpp"
#include "beatscribe/labeler/decode.hpp"
#include "beatscribe/labeler/labels.hpp"
#include "beatscribe/labeler/model.hpp"
#include "beatscribe/labeler/train.hpp"
#include "beatscribe/leadsheet.hpp"
#include "beatscribe/matrix.hpp"
#include "beatscribe/midi.hpp"
#include "beatscribe/pipeline.hpp"
#include "beatscribe/synth.hpp"
