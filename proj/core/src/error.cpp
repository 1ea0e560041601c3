#include "idse/error.hpp"
