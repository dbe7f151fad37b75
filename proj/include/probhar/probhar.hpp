#pragma once

#include "probhar/axioms.hpp"
#include "probhar/domain.hpp"
#include "probhar/evaluation.hpp"
#include "probhar/inference.hpp"
#include "probhar/observations.hpp"
#include "probhar/pipeline.hpp"
#include "probhar/relstore.hpp"
#include "probhar/scenario.hpp"
#include "probhar/segmentation.hpp"
#include "probhar/smoothing.hpp"
#include "probhar/dataset_io.hpp"
