#include "kinbridge/errors.hpp"
