#pragma once

#include "embmarker/classifier.hpp"
#include "embmarker/corpus.hpp"
#include "embmarker/embedder.hpp"
#include "embmarker/error.hpp"
#include "embmarker/extraction.hpp"
#include "embmarker/harness.hpp"
#include "embmarker/pca.hpp"
#include "embmarker/random.hpp"
#include "embmarker/service.hpp"
#include "embmarker/stats.hpp"
#include "embmarker/transforms.hpp"
#include "embmarker/verification.hpp"
#include "embmarker/watermark.hpp"
