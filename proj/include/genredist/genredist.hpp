#pragma once

#include "genredist/corpus.hpp"
#include "genredist/distance_matrix.hpp"
#include "genredist/embedding.hpp"
#include "genredist/error.hpp"
#include "genredist/evaluation.hpp"
#include "genredist/label.hpp"
#include "genredist/lexical_distance.hpp"
#include "genredist/logistic.hpp"
#include "genredist/model_distance.hpp"
#include "genredist/pipeline.hpp"
#include "genredist/random.hpp"
#include "genredist/sampling.hpp"
#include "genredist/social_proximity.hpp"
#include "genredist/stats.hpp"
#include "genredist/stopwords.hpp"
#include "genredist/synth.hpp"
#include "genredist/topic_distance.hpp"
#include "genredist/version.hpp"
#include "genredist/vocabulary.hpp"
