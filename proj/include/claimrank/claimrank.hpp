#pragma once

// Umbrella header for the check-worthiness ranking library.

#include "claimrank/align.hpp"
#include "claimrank/audio.hpp"
#include "claimrank/checkpoint.hpp"
#include "claimrank/config.hpp"
#include "claimrank/corpus.hpp"
#include "claimrank/error.hpp"
#include "claimrank/eval.hpp"
#include "claimrank/features.hpp"
#include "claimrank/fft.hpp"
#include "claimrank/fixture.hpp"
#include "claimrank/fusion.hpp"
#include "claimrank/hash.hpp"
#include "claimrank/io.hpp"
#include "claimrank/matrix.hpp"
#include "claimrank/mfcc.hpp"
#include "claimrank/nn.hpp"
#include "claimrank/parallel.hpp"
#include "claimrank/rng.hpp"
#include "claimrank/sampling.hpp"
#include "claimrank/spectral.hpp"
#include "claimrank/textfeat.hpp"
#include "claimrank/train.hpp"
